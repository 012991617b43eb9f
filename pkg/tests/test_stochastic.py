import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from askey_lattice import families as fam
from askey_lattice import spectral, stochastic
from askey_lattice.errors import ConfigError, InvalidDistribution

from test_families import any_instances, finite_instances


def K(N=4, p=0.5):
    return fam.validate("krawtchouk", {"p": p}, N)


def test_generator_example():
    L = stochastic.bd_generator(K(N=1)).matrix
    np.testing.assert_array_equal(L, [[-0.5, 0.5], [0.5, -0.5]])


def test_kernel_examples():
    k1 = K(N=1)
    for t in (0.1, 1.0, 3.0):
        col = stochastic.bd_kernel(k1, t).column(0)
        e = math.exp(-t)
        np.testing.assert_allclose(col, [0.5 + 0.5 * e, 0.5 - 0.5 * e], rtol=1e-14)
    np.testing.assert_array_equal(stochastic.bd_kernel(K(), 0.0).matrix, np.eye(5))
    with pytest.raises(ConfigError):
        stochastic.bd_kernel(K(), -1.0)


def test_stationary_examples():
    np.testing.assert_allclose(stochastic.stationary(K(N=1)), [0.5, 0.5], rtol=1e-15)
    c = fam.validate("charlier", {"a": 1.0})
    x = np.arange(c.size)
    expect = np.exp(-1.0) / np.array([math.factorial(int(v)) for v in x])
    np.testing.assert_allclose(stochastic.stationary(c), expect, rtol=1e-12)


def test_evolve_examples():
    k = K()
    pi = stochastic.stationary(k)
    traj = stochastic.bd_evolve(k, pi, [0.0, 0.5, 2.0, 10.0])
    np.testing.assert_allclose(traj.probs, np.tile(pi, (4, 1)), atol=1e-14)
    delta = np.eye(5)[2]
    traj = stochastic.bd_evolve(k, delta, [0.0, 1.0])
    np.testing.assert_allclose(traj.probs[1], stochastic.bd_kernel(k, 1.0).column(2), atol=1e-15)
    np.testing.assert_allclose(traj.totals(), 1.0, atol=1e-12)


@pytest.mark.parametrize("p0", [[0.5, 0.5], [1.2, -0.2, 0, 0, 0], [0.5, 0.4, 0, 0, 0],
                                [math.nan, 1, 0, 0, 0]])
def test_invalid_distribution(p0):
    with pytest.raises(InvalidDistribution):
        stochastic.bd_evolve(K(), p0, [0.0])


@pytest.mark.parametrize("ts", [[1.0, 0.5], [-1.0], [math.inf]])
def test_invalid_time_grid(ts):
    with pytest.raises(ConfigError):
        stochastic.bd_evolve(K(), np.eye(5)[0], ts)


def test_walker_examples():
    k = K()
    assert stochastic.multi_walker_decay(k, [], 2.0) == 1.0
    assert stochastic.multi_walker_decay(k, [1, 3], 0.0) == 1.0
    assert stochastic.multi_walker_decay(k, [1, 2], 1.0) == pytest.approx(math.exp(-3), rel=1e-15)
    assert stochastic.multi_walker_decay(k, [1, 2, 3], 1.0) < stochastic.multi_walker_decay(k, [1, 2], 1.0)
    np.testing.assert_array_equal(stochastic.fermion_walk_single(k, 3, 0.0), np.eye(5)[3])
    late = stochastic.fermion_walk_single(k, 1, stochastic.relaxation_time(k))
    np.testing.assert_allclose(late, stochastic.stationary(k), atol=1e-12)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


@given(any_instances)
def test_generator_similarity_and_zero_sums(inst):
    L = stochastic.bd_generator(inst)
    H = spectral.build_hamiltonian(inst).dense()
    phi0 = np.array([fam.sqrt_weight(inst, x) for x in fam.sites(inst)])
    sim = -(phi0[:, None] * H / phi0[None, :])
    scale = max(1.0, np.abs(H).max())
    if inst.finite:
        assert np.abs(L.matrix - sim).max() <= 1e-10 * scale
        assert np.all(L.column_sums() == 0.0)
    else:
        # the truncation leak sits on the last diagonal entry only
        assert np.abs(L.matrix - sim)[:, :-1].max() <= 1e-10 * scale
        assert np.all(L.column_sums()[:-1] == 0.0)


@given(any_instances)
def test_generator_eigen_relation(inst):
    L = stochastic.bd_generator(inst).matrix
    es = spectral.analytic_eigensystem(inst)
    V = es.vectors
    phi0 = V[:, 0]
    n_check = es.n_modes
    rows = slice(None) if inst.finite else slice(0, inst.size - 1)
    absL = np.abs(L)
    for n in range(n_check):
        u = phi0 * V[:, n]
        r = (L @ u + es.energies[n] * u)[rows]
        # componentwise: q-lattices carry rates up to ~1e180 far from the origin
        scale = (absL @ np.abs(u) + es.energies[n] * np.abs(u))[rows]
        assert np.all(np.abs(r) <= 1e-9 * np.maximum(scale, 1e-300))
    pi = stochastic.stationary(inst)
    assert np.all(np.abs((L @ pi)[rows]) <= 1e-10 * np.maximum((absL @ pi)[rows], 1e-300))


@given(finite_instances(max_N=8), st.sampled_from((0.1, 1.0, 5.0)))
def test_kernel_matches_expm(inst, t):
    L = stochastic.bd_generator(inst).matrix
    P = stochastic.bd_kernel(inst, t)
    assert np.abs(P.matrix - stochastic.expm(t * L)).max() <= 1e-8
    assert P.column_sum_defect() <= 1e-9
    assert P.matrix.min() >= -1e-10


@given(finite_instances(max_N=8), st.sampled_from(((0.3, 0.7), (1.0, 1.0))))
def test_kernel_semigroup(inst, pair):
    t1, t2 = pair
    P = stochastic.bd_kernel(inst, t1).matrix @ stochastic.bd_kernel(inst, t2).matrix
    assert np.abs(P - stochastic.bd_kernel(inst, t1 + t2).matrix).max() <= 1e-8


@given(finite_instances(max_N=8), st.data())
def test_fermion_walk_is_kernel_column(inst, data):
    y = data.draw(st.integers(0, inst.last_site))
    t = data.draw(st.floats(0, 5))
    np.testing.assert_allclose(
        stochastic.fermion_walk_single(inst, y, t), stochastic.bd_kernel(inst, t).column(y),
        rtol=0, atol=1e-12)


@given(finite_instances(max_N=8))
def test_long_time_limit(inst):
    P = stochastic.bd_kernel(inst, stochastic.relaxation_time(inst)).matrix
    pi = stochastic.stationary(inst)
    assert np.abs(P - pi[:, None]).max() <= 1e-8
    assert math.fsum(pi) == pytest.approx(1.0, abs=1e-12)


@given(finite_instances(max_N=6), st.data())
def test_evolve_conserves_probability(inst, data):
    w = data.draw(hnp.arrays(float, inst.size, elements=st.floats(0, 1)))
    if w.sum() == 0:
        w[0] = 1.0
    p0 = w / math.fsum(w)
    p0[-1] = max(0.0, 1.0 - math.fsum(p0[:-1]))
    traj = stochastic.bd_evolve(inst, p0, [0.0, 0.2, 1.0, 4.0])
    np.testing.assert_allclose(traj.totals(), 1.0, atol=1e-9)
    assert traj.probs.min() >= -1e-10


# ---------------------------------------------------------------------------
# matrix exponential oracle
# ---------------------------------------------------------------------------


def _expm_series(a, terms=60):
    """Plain Taylor series; only meaningful for small norms."""
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for j in range(1, terms):
        term = term @ a / j
        out = out + term
    return out


@given(st.integers(1, 6).flatmap(
    lambda n: hnp.arrays(float, (n, n), elements=st.floats(-0.3, 0.3))))
def test_expm_small_norm(a):
    np.testing.assert_allclose(stochastic.expm(a), _expm_series(a), atol=1e-13)


@given(st.floats(-40, 40), st.floats(0, 30))
def test_expm_rotation_and_scalar(s, theta):
    a = np.array([[s, -theta], [theta, s]])
    c, sn = math.cos(theta), math.sin(theta)
    expect = math.exp(s) * np.array([[c, -sn], [sn, c]])
    np.testing.assert_allclose(stochastic.expm(a), expect, atol=1e-10 * max(1.0, math.exp(s)))


def test_expm_generator_group_law():
    L = stochastic.bd_generator(fam.validate("hahn", {"a": 1.5, "b": 0.7}, 6)).matrix
    E1 = stochastic.expm(0.5 * L)
    np.testing.assert_allclose(E1 @ E1, stochastic.expm(L), atol=1e-13)
    np.testing.assert_allclose(stochastic.expm(np.zeros((3, 3))), np.eye(3))
