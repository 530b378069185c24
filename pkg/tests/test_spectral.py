import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginibre_flow import (
    DiffusionParams,
    InitialCondition,
    QuaternionPoint,
    SpectralSample,
    eigen_full,
    estimate_density,
    estimate_mean_determinant,
    estimate_overlap_correlator,
    estimate_petermann,
    make_initial,
    quaternionic_determinant,
    resolvent_trace,
    resolvent_trace_eigs,
    sample_at_time,
)
from ginibre_flow.spectral import SpectralPointError, default_bin_edges, log_determinants_batch

from .oracles import overlaps_2x2_upper_triangular


def ginibre(n_dim, tau=1.0, seed=1234, index=0):
    params = DiffusionParams(N=n_dim, tau=tau, master_seed=seed, num_samples=index + 1)
    return sample_at_time(params, InitialCondition.zero(), index)


def ensemble(n_dim, n_samples, tau=1.0, seed=99):
    params = DiffusionParams(N=n_dim, tau=tau, master_seed=seed, num_samples=n_samples)
    return [sample_at_time(params, InitialCondition.zero(), i) for i in range(n_samples)]


# ---------------------------------------------------------------- eigen_full

def test_scalar_case():
    s = eigen_full(make_initial(InitialCondition.custom(np.array([[2.0 - 1.0j]])), 1))
    assert s.eigenvalues[0] == pytest.approx(2.0 - 1.0j)
    assert s.diag_overlaps[0] == pytest.approx(1.0)


def test_2x2_upper_triangular_against_hand_solution():
    a, b = 1.5 - 0.5j, 0.8j
    x = np.array([[0.0, a], [0.0, b]])
    s = eigen_full(make_initial(InitialCondition.custom(x), 2))
    lam_ref, o_ref = overlaps_2x2_upper_triangular(a, b)
    assert sorted(s.eigenvalues, key=abs) == pytest.approx(sorted(lam_ref, key=abs))
    expected = 1.0 + abs(a) ** 2 / abs(b) ** 2
    assert o_ref == pytest.approx([expected, expected])
    assert np.sort(s.diag_overlaps) == pytest.approx(np.sort(o_ref))


def test_reconstruction_and_biorthogonality():
    state = ginibre(50, seed=7)
    lam, right = np.linalg.eig(state.entries)
    left = np.linalg.inv(right)
    assert np.linalg.norm(left @ right - np.eye(50)) < 1e-10
    rebuilt = (right * lam) @ left
    rel = np.linalg.norm(rebuilt - state.entries) / np.linalg.norm(state.entries)
    assert rel < 1e-8
    s = eigen_full(state)
    assert np.all(s.diag_overlaps >= 1.0 - 1e-9)
    assert not s.condition_flag


def test_overlap_bound_and_full_overlaps():
    state = ginibre(20, seed=3)
    s = eigen_full(state, keep_full_overlaps=True)
    assert s.full_overlaps.shape == (20, 20)
    assert np.allclose(np.diag(s.full_overlaps).real, s.diag_overlaps)
    # row sums of A_ij collapse to delta-normalization: sum_j A_ij = 1 per row
    assert np.allclose(s.full_overlaps.sum(axis=1).real, 1.0, atol=1e-8)


def test_condition_flag_near_defective():
    # Jordan-like block: eigenvector matrix nearly singular
    eps = 1e-14
    x = np.array([[0.0, 1.0], [0.0, eps]])
    s = eigen_full(make_initial(InitialCondition.custom(x), 2))
    assert s.condition_flag


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=2, max_value=12))
def test_overlaps_at_least_one_property(seed, n_dim):
    s = eigen_full(ginibre(n_dim, seed=seed))
    assert np.all(s.diag_overlaps >= 1.0 - 1e-9)


# ---------------------------------------------------------- resolvent trace

def test_resolvent_zero_matrix():
    state = make_initial(InitialCondition.zero(), 5)
    for z in (2.0, 1.0 + 1.0j, -0.3j):
        assert resolvent_trace(state, z) == pytest.approx(1.0 / z)


def test_resolvent_on_spectrum_raises():
    x = np.diag([1.0, 2.0, 3.0]).astype(complex)
    state = make_initial(InitialCondition.custom(x), 3)
    with pytest.raises(SpectralPointError):
        resolvent_trace(state, 2.0)
    with pytest.raises(SpectralPointError):
        resolvent_trace_eigs(np.array([1.0, 2.0]), 2.0)


def test_resolvent_routes_agree():
    state = ginibre(30, seed=17)
    z = 1.7 + 0.4j
    via_solve = resolvent_trace(state, z)
    via_eigs = resolvent_trace_eigs(np.linalg.eigvals(state.entries), z)
    assert via_solve == pytest.approx(via_eigs, rel=1e-10)


# ------------------------------------------------ quaternionic determinant

def test_determinant_zero_matrix_closed_form():
    for n_dim in (2, 5, 20):
        state = make_initial(InitialCondition.zero(), n_dim)
        for (z, w) in [(1.2, 0.5), (0.3 - 0.7j, 1.0j), (2.0, 0.0)]:
            ld = quaternionic_determinant(state, QuaternionPoint(z=z, w=w))
            expected = n_dim * np.log(abs(z) ** 2 + abs(w) ** 2)
            assert ld.log_value == pytest.approx(expected, rel=1e-12)


def test_determinant_nilpotent_closed_form():
    state = make_initial(InitialCondition.nilpotent(1.0), 2)
    for (z, w) in [(0.9, 0.4), (1.0 + 0.5j, 0.8), (0.2, 1.3j)]:
        s = abs(z) ** 2 + abs(w) ** 2
        expected = np.log(s**2 * (1.0 + abs(w) ** 2 / s**2))
        ld = quaternionic_determinant(state, QuaternionPoint(z=z, w=w))
        assert ld.log_value == pytest.approx(expected, rel=1e-12)


def test_determinant_w_zero_matches_abs_det_squared():
    state = ginibre(25, seed=5)
    z = 0.4 + 0.1j
    ld = quaternionic_determinant(state, QuaternionPoint(z=z, w=0.0))
    sign, logdet = np.linalg.slogdet(z * np.eye(25) - state.entries)
    assert ld.log_value == pytest.approx(2 * logdet, rel=1e-10)


def test_determinant_at_eigenvalue_is_minus_inf():
    x = np.diag([1.0, 2.0]).astype(complex)
    state = make_initial(InitialCondition.custom(x), 2)
    ld = quaternionic_determinant(state, QuaternionPoint(z=1.0, w=0.0))
    assert ld.log_value == -np.inf


def test_determinant_phase_invariance_exact():
    state = ginibre(12, seed=8)
    r = 0.37
    base = quaternionic_determinant(state, QuaternionPoint(z=1.1, w=r))
    for phi in (0.3, 1.0, 2.7):
        rotated = quaternionic_determinant(
            state, QuaternionPoint(z=1.1, w=r * np.exp(1j * phi))
        )
        assert rotated.log_value == base.log_value


def test_batch_matches_single():
    states = ensemble(10, 6, seed=21)
    p = QuaternionPoint(z=0.7, w=0.2)
    batch = log_determinants_batch(np.stack([s.entries for s in states]), p)
    singles = [quaternionic_determinant(s, p).log_value for s in states]
    assert batch == pytest.approx(singles, rel=1e-13)


# ------------------------------------------------------- mean determinant

def test_mean_determinant_degenerate_ensemble():
    states = [make_initial(InitialCondition.zero(), 4) for _ in range(5)]
    p = QuaternionPoint(z=1.5, w=0.5)
    m = estimate_mean_determinant(states, p)
    assert m.log_mean == pytest.approx(4 * np.log(abs(1.5) ** 2 + 0.25), rel=1e-12)
    assert m.log_std_error == 0.0
    assert m.effective_sample_size == pytest.approx(5.0)


def test_mean_determinant_needs_two_samples():
    with pytest.raises(ValueError):
        estimate_mean_determinant([make_initial(InitialCondition.zero(), 3)], QuaternionPoint(z=1, w=1))


def test_mean_determinant_phase_invariance():
    states = ensemble(8, 12, seed=31)
    a = estimate_mean_determinant(states, QuaternionPoint(z=1.0, w=0.4))
    b = estimate_mean_determinant(states, QuaternionPoint(z=1.0, w=0.4j))
    assert a.log_mean == b.log_mean


# ------------------------------------------------------------- estimators

def test_density_total_integral_identity():
    samples = [eigen_full(s) for s in ensemble(40, 25, seed=1)]
    edges = default_bin_edges(1.0)  # covers all eigenvalues up to 1.2 sqrt(tau)
    # extend edges far enough that nothing escapes
    edges = np.append(edges, [2.0, 5.0])
    prof = estimate_density(samples, edges, tau=1.0)
    total = np.sum(prof.values * prof.areas)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert prof.counts.sum() == 25 * 40


def test_density_uniform_rough():
    samples = [eigen_full(s) for s in ensemble(100, 200, seed=42)]
    edges = np.sqrt(np.linspace(0.0, 1.0, 9))  # equal-area annuli on the unit disc
    prof = estimate_density(samples, edges, tau=1.0)
    inner = prof.values[:6]
    assert np.all(np.abs(inner - 1 / np.pi) < 5 * prof.std_errors[:6] + 0.02 / np.pi)


def test_density_empty_bin_flagged():
    samples = [eigen_full(s) for s in ensemble(10, 4, seed=2)]
    edges = np.array([5.0, 6.0, 7.0])
    prof = estimate_density(samples, edges, tau=1.0)
    assert np.all(prof.values == 0.0)
    assert np.all(np.isinf(prof.std_errors))
    assert np.all(prof.counts == 0)


def test_petermann_scalar_ensemble_is_one():
    samples = [eigen_full(s) for s in ensemble(1, 50, seed=3, tau=1.0)]
    edges = np.array([0.0, 1.0, 2.0, 4.0])
    prof = estimate_petermann(samples, edges)
    filled = prof.counts > 0
    assert filled.any()
    assert np.allclose(prof.values[filled], 1.0)


def test_petermann_empty_bins_undefined():
    samples = [eigen_full(s) for s in ensemble(8, 5, seed=4)]
    edges = np.array([0.0, 0.5, 50.0, 60.0])
    prof = estimate_petermann(samples, edges)
    assert np.isnan(prof.values[-1])
    assert np.isinf(prof.std_errors[-1])


def test_petermann_equals_ratio_of_estimators():
    samples = [eigen_full(s) for s in ensemble(30, 40, seed=5)]
    edges = default_bin_edges(1.0)
    pet = estimate_petermann(samples, edges)
    rho = estimate_density(samples, edges, tau=1.0)
    v2 = estimate_overlap_correlator(samples, edges)
    n_dim = samples[0].N
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = n_dim * v2.values / (np.pi * rho.values)
    filled = pet.counts > 0
    assert ratio[filled] == pytest.approx(pet.values[filled], rel=1e-12)


def test_flagged_samples_excluded_from_overlap_stats():
    samples = [eigen_full(s) for s in ensemble(10, 6, seed=6)]
    flagged = SpectralSample(
        eigenvalues=samples[0].eigenvalues,
        diag_overlaps=samples[0].diag_overlaps * 1e6,
        condition_flag=True,
    )
    edges = np.array([0.0, 2.0])
    with_flag = estimate_petermann(samples + [flagged], edges)
    without = estimate_petermann(samples, edges)
    assert with_flag.values == pytest.approx(without.values)
    # density keeps every sample: eigenvalues stay trustworthy
    d_with = estimate_density(samples + [flagged], edges, tau=1.0)
    assert d_with.counts.sum() == 7 * 10


def test_profile_validation():
    with pytest.raises(ValueError):
        estimate_density([], np.array([0.0, 1.0]), tau=1.0)
    from ginibre_flow import RadialProfile

    with pytest.raises(ValueError):
        RadialProfile(
            bin_edges=np.array([1.0, 0.5]),
            values=np.zeros(1),
            std_errors=np.zeros(1),
            counts=np.zeros(1),
        )
