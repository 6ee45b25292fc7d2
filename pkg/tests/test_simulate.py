"""Data generators and chain analysis: exact oracles and seeded checks."""

import math

import numpy as np
import pytest

from kcusum import (
    ArScenario,
    DoeblinParams,
    FiniteChain,
    FiniteScenario,
    GaussianLaw,
    KernelSpec,
    default_system_matrix,
    doeblin_of_finite,
    exact_mmd_finite,
    lift_chain,
    load_trajectory,
    mean_change_scenario,
    rho_envelope,
    save_trajectory,
    sigma_from_doeblin,
    simulate_ar,
    simulate_finite,
    simulate_finite_scenario,
    stationary_distribution,
    stream_rng,
    variance_change_scenario,
)

TWO_STATE = np.array([[0.9, 0.1], [0.2, 0.8]])
TWO_STATE_ALT = np.array([[0.8, 0.2], [0.2, 0.8]])


def two_state_chain(matrix=TWO_STATE):
    return FiniteChain(states=np.array([[0.0], [1.0]]), matrix=matrix)


# -- random streams -----------------------------------------------------------


def test_stream_rng_reproducible_and_separated():
    a = stream_rng(7, 3).standard_normal(8)
    b = stream_rng(7, 3).standard_normal(8)
    c = stream_rng(7, 4).standard_normal(8)
    d = stream_rng(8, 3).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_rng_validation():
    for seed, stream in ((-1, 0), (0.5, 0), (0, -2), (2**64, 0)):
        with pytest.raises(ValueError):
            stream_rng(seed, stream)


# -- Gaussian noise laws ------------------------------------------------------


def test_gaussian_law_isotropic():
    law = GaussianLaw.isotropic(3, 0.25, mean=1.5)
    assert law.dim == 3
    assert np.array_equal(law.mean, np.full(3, 1.5))
    assert np.array_equal(law.cov, 0.25 * np.eye(3))
    with pytest.raises(ValueError):
        law.mean[0] = 0.0  # frozen


def test_gaussian_law_transform_matches_moments():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    law = GaussianLaw(mean=np.array([1.0, -2.0]), cov=cov)
    z = stream_rng(0, 0).standard_normal((200_000, 2))
    x = law.transform(z)
    assert np.allclose(x.mean(axis=0), law.mean, atol=0.02)
    assert np.allclose(np.cov(x.T), cov, atol=0.03)


def test_gaussian_law_validation():
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.zeros((2, 2)), cov=np.eye(2))
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.zeros(2), cov=np.eye(3))
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.2, 1.0]]))
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.zeros(2), cov=np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PSD
    with pytest.raises(ValueError):
        GaussianLaw.isotropic(0, 1.0)
    with pytest.raises(ValueError):
        GaussianLaw.isotropic(2, -1.0)


# -- linear-recursion scenarios -----------------------------------------------


def test_default_matrix_is_pinned_and_copied():
    A = default_system_matrix()
    assert np.allclose(A, A.T, atol=1e-15)
    eigs = np.sort(np.linalg.eigvalsh(A))
    assert np.allclose(eigs, [-0.80, -0.30, 0.55, 0.95], atol=1e-12)
    A[0, 0] = 99.0
    assert default_system_matrix()[0, 0] != 99.0


def test_simulate_ar_shape_and_determinism():
    scenario = variance_change_scenario(length=300, change_at=100, burn_in=50)
    x1 = simulate_ar(scenario, seed=5, stream=2)
    x2 = simulate_ar(scenario, seed=5, stream=2)
    assert x1.shape == (300, 4)
    assert np.array_equal(x1, x2)
    assert not np.array_equal(x1, simulate_ar(scenario, seed=5, stream=3))


def test_change_beyond_horizon_is_bit_identical_to_no_change():
    quiet = variance_change_scenario(length=200, change_at=None, burn_in=40)
    late = variance_change_scenario(length=200, change_at=5000, burn_in=40)
    assert np.array_equal(simulate_ar(quiet, seed=9), simulate_ar(late, seed=9))


def test_change_actually_changes_only_after_change_index():
    pre_only = variance_change_scenario(length=200, change_at=None, burn_in=40)
    changed = variance_change_scenario(length=200, change_at=120, burn_in=40)
    a, b = simulate_ar(pre_only, seed=11), simulate_ar(changed, seed=11)
    assert np.array_equal(a[:120], b[:120])
    assert not np.array_equal(a[120:], b[120:])


def test_stock_scenarios_expose_documented_laws():
    var = variance_change_scenario()
    assert np.allclose(var.pre_noise.cov, 0.1 * np.eye(4))
    assert np.allclose(var.post_noise.cov, 0.2 * np.eye(4))
    mean = mean_change_scenario()
    assert np.allclose(mean.post_noise.mean, np.full(4, 0.05))
    assert np.allclose(mean.post_noise.cov, 0.1 * np.eye(4))


def test_ar_scenario_validation():
    noise = GaussianLaw.isotropic(2, 1.0)
    ok = dict(matrix=0.5 * np.eye(2), pre_noise=noise)
    ArScenario(**ok)
    with pytest.raises(ValueError):
        ArScenario(matrix=np.eye(2), pre_noise=noise)  # not stable
    with pytest.raises(ValueError):
        ArScenario(matrix=np.zeros((2, 3)), pre_noise=noise)
    with pytest.raises(ValueError):
        ArScenario(**ok, post_noise=noise)  # change_at missing
    with pytest.raises(ValueError):
        ArScenario(**ok, change_at=100)  # post_noise missing
    with pytest.raises(ValueError):
        ArScenario(**ok, post_noise=noise, change_at=0)
    with pytest.raises(ValueError):
        ArScenario(**ok, length=0)
    with pytest.raises(ValueError):
        ArScenario(**ok, burn_in=-1)
    with pytest.raises(ValueError):
        ArScenario(matrix=0.5 * np.eye(3), pre_noise=noise)  # dim mismatch


# -- finite chains ------------------------------------------------------------


def test_finite_chain_validation():
    states = np.array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        FiniteChain(states=states, matrix=np.array([[0.9, 0.2], [0.2, 0.8]]))
    with pytest.raises(ValueError):
        FiniteChain(states=states, matrix=np.array([[1.1, -0.1], [0.2, 0.8]]))
    with pytest.raises(ValueError, match="primitive"):
        FiniteChain(states=states, matrix=np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError, match="primitive"):
        FiniteChain(states=states, matrix=np.eye(2))
    with pytest.raises(ValueError):
        FiniteChain(states=np.zeros((3, 1)), matrix=TWO_STATE)


def test_stationary_distribution_closed_form():
    pi = stationary_distribution(two_state_chain())
    assert np.allclose(pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)
    sym = stationary_distribution(two_state_chain(TWO_STATE_ALT))
    assert np.allclose(sym, [0.5, 0.5], atol=1e-12)


def minorisation_mass(P, lag):
    return float(np.linalg.matrix_power(P, lag).min(axis=0).sum())


def test_doeblin_two_state_lag_one():
    params = doeblin_of_finite(two_state_chain())
    assert params.lag == 1
    assert math.isclose(params.lam, 0.3, rel_tol=0, abs_tol=1e-15)


def test_doeblin_finds_smallest_lag():
    P = np.array([[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]])
    chain = FiniteChain(states=np.arange(3.0)[:, None], matrix=P)
    params = doeblin_of_finite(chain)
    assert minorisation_mass(P, params.lag) == params.lam
    for shorter in range(1, params.lag):
        assert minorisation_mass(P, shorter) == 0.0
    assert params.lag == 2 and math.isclose(params.lam, 0.25, abs_tol=1e-15)


def test_doeblin_rejects_exact_coupling():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError, match="couples exactly"):
        doeblin_of_finite(FiniteChain(states=np.array([[0.0], [1.0]]), matrix=P))


def test_lift_chain_two_state_full_support():
    chain = two_state_chain()
    lifted = lift_chain(chain)
    assert lifted.n_states == 4 and lifted.dim == 2
    # pair (i, j) embeds as (x_i, x_j), lexicographic order
    assert np.array_equal(
        lifted.states, [[0, 0], [0, 1], [1, 0], [1, 1]]
    )
    pi = stationary_distribution(chain)
    pair_law = (pi[:, None] * chain.matrix).ravel()
    assert np.allclose(stationary_distribution(lifted), pair_law, atol=1e-12)


def test_lift_chain_restricts_to_supported_pairs():
    P = np.array([[0.0, 1.0], [0.5, 0.5]])
    lifted = lift_chain(FiniteChain(states=np.array([[0.0], [1.0]]), matrix=P))
    assert lifted.n_states == 3  # (0,1), (1,0), (1,1)
    want = np.array(
        [
            [0.0, 0.5, 0.5],  # (0,1) -> (1,0) or (1,1)
            [1.0, 0.0, 0.0],  # (1,0) -> (0,1)
            [0.0, 0.5, 0.5],  # (1,1) -> (1,0) or (1,1)
        ]
    )
    assert np.array_equal(lifted.matrix, want)


# -- exact population discrepancy ----------------------------------------------


def test_exact_mmd_identical_chains_is_zero():
    chain = two_state_chain()
    kernel = KernelSpec.gaussian(1.0)
    assert exact_mmd_finite(kernel, chain, chain) == 0.0


def test_exact_mmd_narrow_kernel_recovers_pair_law_distance():
    """With a near-delta kernel the Gram matrix over the distinct pair
    states is the identity, so the squared discrepancy collapses to the
    squared Euclidean distance between the stationary pair laws:
    here ||F_P - F_Q||^2 = 0.2^2 + (1/30)^2 + (1/30)^2 + (2/15)^2 = 0.06."""
    p = two_state_chain()
    q = two_state_chain(TWO_STATE_ALT)
    kernel = KernelSpec.gaussian(0.01)
    got = exact_mmd_finite(kernel, p, q)
    assert math.isclose(got, math.sqrt(0.06), rel_tol=0, abs_tol=1e-9)


def test_exact_mmd_symmetry_and_triangle():
    kernel = KernelSpec.mixture([0.5, 2.0])
    a = two_state_chain()
    b = two_state_chain(TWO_STATE_ALT)
    c = two_state_chain(np.array([[0.5, 0.5], [0.3, 0.7]]))
    ab, ba = exact_mmd_finite(kernel, a, b), exact_mmd_finite(kernel, b, a)
    assert math.isclose(ab, ba, rel_tol=0, abs_tol=1e-12)
    ac = exact_mmd_finite(kernel, a, c)
    cb = exact_mmd_finite(kernel, c, b)
    assert ab <= ac + cb + 1e-9


def test_exact_mmd_requires_shared_embedding():
    kernel = KernelSpec.gaussian(1.0)
    other = FiniteChain(states=np.array([[0.0], [2.0]]), matrix=TWO_STATE)
    with pytest.raises(ValueError):
        exact_mmd_finite(kernel, two_state_chain(), other)


# -- decay envelope vs exact chain covariances ----------------------------------


def exact_lagged_covariances(chain, kernel, max_lag):
    """Spectral norms of the exact lag-t feature cross-covariances.

    States are embedded in feature space via a Cholesky factor of the
    state Gram matrix, so unit vectors in coordinates are exactly the
    unit ball of kernel functions on the states.
    """
    K = kernel.gram(chain.states, chain.states)
    # small jitter keeps Cholesky defined for nearly singular grams
    L = np.linalg.cholesky(K + 1e-12 * np.eye(chain.n_states))
    phi = L  # row i = feature vector of state i
    pi = stationary_distribution(chain)
    mu = pi @ phi
    P = chain.matrix
    power = np.eye(chain.n_states)
    norms = []
    for _ in range(1, max_lag + 1):
        power = power @ P
        joint = (pi[:, None] * power)  # joint law of (X_0, X_t)
        C = phi.T @ joint @ phi - np.outer(mu, mu)
        norms.append(float(np.linalg.norm(C, 2)))
    return norms


@pytest.mark.parametrize(
    "matrix",
    [TWO_STATE, TWO_STATE_ALT, np.array([[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]])],
    ids=["two-state", "symmetric", "three-state-lag2"],
)
def test_envelope_dominates_exact_covariances(matrix):
    chain = FiniteChain(states=np.arange(float(matrix.shape[0]))[:, None], matrix=matrix)
    kernel = KernelSpec.gaussian(1.0)
    params = doeblin_of_finite(chain)
    norms = exact_lagged_covariances(chain, kernel, max_lag=200)
    for t, norm in enumerate(norms, start=1):
        # 1e-12 absorbs the rounding floor of the matrix products once
        # the true covariance has decayed below machine noise
        assert norm <= rho_envelope(params, t) + 1e-12
    assert math.fsum(norms) <= sigma_from_doeblin(params)


def test_envelope_dominates_lifted_chain_covariances():
    chain = lift_chain(two_state_chain())
    kernel = KernelSpec.gaussian(1.0)
    params = doeblin_of_finite(chain)
    norms = exact_lagged_covariances(chain, kernel, max_lag=200)
    for t, norm in enumerate(norms, start=1):
        assert norm <= rho_envelope(params, t) + 1e-12
    assert math.fsum(norms) <= sigma_from_doeblin(params)


# -- finite-chain simulation -----------------------------------------------------


def test_simulate_finite_deterministic_and_embedded():
    chain = two_state_chain()
    x1 = simulate_finite(chain, 50, seed=3, stream=1)
    x2 = simulate_finite(chain, 50, seed=3, stream=1)
    assert np.array_equal(x1, x2)
    assert x1.shape == (50, 1)
    assert set(np.unique(x1)) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        simulate_finite(chain, 0, seed=3)


def test_simulated_pair_frequencies_match_stationary_pair_law():
    chain = two_state_chain()
    x = simulate_finite(chain, 200_000, seed=12, stream=0).ravel()
    pi = stationary_distribution(chain)
    pair_law = (pi[:, None] * chain.matrix).ravel()
    counts = np.zeros(4)
    idx = (2 * x[:-1] + x[1:]).astype(int)
    for k in range(4):
        counts[k] = np.count_nonzero(idx == k)
    freq = counts / idx.shape[0]
    assert 0.5 * np.abs(freq - pair_law).sum() < 0.01  # total variation


def test_scenario_prefix_matches_pre_chain_run():
    pre, post = two_state_chain(), two_state_chain(TWO_STATE_ALT)
    scenario = FiniteScenario(pre=pre, post=post, change_at=40, length=100)
    with_change = simulate_finite_scenario(scenario, seed=6, stream=2)
    without = simulate_finite(pre, 100, seed=6, stream=2)
    assert np.array_equal(with_change[:40], without[:40])
    assert not np.array_equal(with_change, without)


def test_finite_scenario_validation():
    pre, post = two_state_chain(), two_state_chain(TWO_STATE_ALT)
    with pytest.raises(ValueError):
        FiniteScenario(pre=pre, post=post, change_at=0, length=10)
    with pytest.raises(ValueError):
        FiniteScenario(pre=pre, post=post, change_at=5, length=0)
    other = FiniteChain(states=np.array([[0.0], [2.0]]), matrix=TWO_STATE_ALT)
    with pytest.raises(ValueError, match="embedding"):
        FiniteScenario(pre=pre, post=other, change_at=5, length=10)


# -- trajectory files -------------------------------------------------------------


def test_save_load_roundtrip_bit_identical(tmp_path):
    rng = stream_rng(1, 1)
    x = rng.standard_normal((17, 3))
    path = tmp_path / "traj.csv"
    save_trajectory(x, path)
    header = path.read_text().splitlines()[0]
    assert header == "t,x_0,x_1,x_2"
    assert np.array_equal(load_trajectory(path), x)


def test_load_rejects_malformed_files(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("time,x_0\n1,0.5\n")
    with pytest.raises(ValueError, match="header"):
        load_trajectory(bad_header)
    ragged = tmp_path / "b.csv"
    ragged.write_text("t,x_0,x_1\n1,0.5\n")
    with pytest.raises(ValueError, match="columns"):
        load_trajectory(ragged)
    empty = tmp_path / "c.csv"
    empty.write_text("t,x_0\n")
    with pytest.raises(ValueError, match="no observations"):
        load_trajectory(empty)
