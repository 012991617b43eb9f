import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from askey_lattice import families as fam
from askey_lattice import spectral
from askey_lattice.errors import ModeCapExceeded
from askey_lattice.spectral import TridiagonalHamiltonian
from askey_lattice.testbed import sample_instance
from askey_lattice.tridiag import dense_eigh, factored_eigh, householder_tridiagonalize, tridiag_eigh

from test_families import any_instances, finite_instances

SQ = math.sqrt(0.5)


def test_build_hamiltonian_examples():
    H = spectral.build_hamiltonian(fam.validate("krawtchouk", {"p": 0.5}, 1))
    np.testing.assert_array_equal(H.diag, [0.5, 0.5])
    np.testing.assert_array_equal(H.offdiag, [-0.5])
    c = spectral.build_hamiltonian(fam.validate("charlier", {"a": 1.0}))
    x = np.arange(c.size)
    np.testing.assert_allclose(c.diag, 1.0 + x, rtol=1e-15)
    np.testing.assert_allclose(c.offdiag, -np.sqrt(x[:-1] + 1.0), rtol=1e-15)
    for N in (3, 7):
        assert spectral.build_hamiltonian(sample_instance("q-hahn", N=N)).offdiag.size == N


def test_analytic_krawtchouk_two_sites():
    es = spectral.analytic_eigensystem(fam.validate("krawtchouk", {"p": 0.5}, 1))
    np.testing.assert_allclose(es.energies, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(es.vectors, [[SQ, SQ], [SQ, -SQ]], atol=1e-15)


def test_oracle_examples():
    es = spectral.oracle_diagonalize(TridiagonalHamiltonian(np.array([0.5, 0.5]), np.array([-0.5])))
    np.testing.assert_allclose(es.energies, [0.0, 1.0], atol=1e-15)
    w, z = tridiag_eigh(np.array([3.0, 1.0, 2.0]), np.zeros(2))
    np.testing.assert_array_equal(w, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.abs(z), np.eye(3)[:, [1, 2, 0]])
    k8 = spectral.build_hamiltonian(fam.validate("krawtchouk", {"p": 0.5}, 8))
    np.testing.assert_allclose(spectral.oracle_diagonalize(k8).energies, np.arange(9.0), atol=1e-10)


def test_verify_examples():
    assert spectral.verify(fam.validate("krawtchouk", {"p": 0.5}, 12), 1e-9).passed
    q, d, N = 0.7, 0.5, 8
    qr = fam.validate("q-racah", {"q": q, "d": d, "a": 0.9 * q**N * d, "b": 0.8}, N)
    assert spectral.verify(qr, 1e-9).passed
    rep = spectral.verify(fam.validate("charlier", {"a": 2.0}), 1e-8)
    assert rep.passed, rep.to_json()
    assert rep.lattice["kind"] == "semi-infinite"


def test_report_json():
    import json

    rep = spectral.verify(fam.validate("hahn", {"a": 1.0, "b": 1.0}, 4))
    d = json.loads(rep.to_json())
    assert d["passed"] is True
    assert {c["name"] for c in d["checks"]} >= {
        "residual", "orthonormality", "completeness", "zero_mode", "spectrum", "psd"}
    assert all(set(c) == {"name", "defect", "tol", "passed"} for c in d["checks"])


def test_mode_cap():
    c = fam.validate("charlier", {"a": 1.0}, min_modes=3)
    with pytest.raises(ModeCapExceeded):
        spectral.analytic_eigensystem(c, c.n_modes + 1)
    es = spectral.analytic_eigensystem(c, 2)
    assert es.vectors.shape == (c.size, 2)
    assert not es.vectors.flags.writeable


# ---------------------------------------------------------------------------
# properties of the closed forms
# ---------------------------------------------------------------------------


@given(any_instances)
def test_eigensystem_structure(inst):
    es = spectral.analytic_eigensystem(inst)
    V = es.vectors
    assert es.energies[0] == 0.0
    assert np.all(V[:, 0] > 0)
    # phi_hat_n(0) = d_n > 0; checked in logs since d_n may underflow
    assert np.all(V[0] >= 0)
    assert all(fam.log_norm_sq(inst, n).sign > 0 for n in range(es.n_modes))
    assert np.abs(V.T @ V - np.eye(V.shape[1])).max() <= 1e-9
    if inst.finite:
        assert np.abs(V @ V.T - np.eye(inst.size)).max() <= 1e-9


@given(finite_instances())
def test_spectrum_equals_oracle(inst):
    H = spectral.build_hamiltonian(inst)
    es = spectral.analytic_eigensystem(inst)
    orc = spectral.oracle_diagonalize(H)
    assert np.max(np.abs(es.energies - orc.energies) / (1 + es.energies)) <= 1e-9
    assert np.all(np.diff(orc.energies) > 0)
    assert orc.energies[0] >= -1e-10 * H.norm()
    # the oracle's sign convention matches d_n > 0 at x = 0
    assert np.abs(orc.vectors - es.vectors).max() <= 1e-6


@given(finite_instances(max_N=8))
def test_eigen_residual(inst):
    H = spectral.build_hamiltonian(inst)
    assert spectral.eigen_residuals(H, spectral.analytic_eigensystem(inst)).max() <= 1e-9


# ---------------------------------------------------------------------------
# oracle solvers against numpy's LAPACK eigensolver
# ---------------------------------------------------------------------------

sizes = st.integers(1, 24)
# LAPACK's reference answer degrades when squared entries underflow
# (e.g. an off-diagonal of 1e-161), so magnitudes stay above 1e-100
reals = st.floats(-10, 10, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100)


@st.composite
def tridiagonals(draw):
    n = draw(sizes)
    d = draw(hnp.arrays(float, n, elements=reals))
    e = draw(hnp.arrays(float, max(n - 1, 0), elements=reals))
    return d, e


@given(tridiagonals())
def test_tridiag_eigh_matches_lapack(de):
    d, e = de
    w, z = tridiag_eigh(d, e)
    A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    scale = 1 + np.abs(A).max()
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-12 * scale)
    assert np.abs(A @ z - z * w).max() <= 1e-11 * scale
    assert np.abs(z.T @ z - np.eye(len(d))).max() <= 1e-12


@given(hnp.arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=reals))
def test_dense_eigh_matches_lapack(m):
    A = m @ m.T
    A = 0.5 * (A + A.T) - np.eye(A.shape[0])
    w, z = dense_eigh(A)
    scale = 1 + np.abs(A).max()
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-11 * scale)
    assert np.abs(A @ z - z * w).max() <= 1e-10 * scale


@given(st.integers(1, 10).flatmap(lambda n: hnp.arrays(float, (n, n), elements=reals)))
def test_householder_is_similarity(m):
    A = 0.5 * (m + m.T)
    d, e, q = householder_tridiagonalize(A)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.abs(q @ T @ q.T - A).max() <= 1e-12 * (1 + np.abs(A).max())


@given(st.integers(2, 16), st.floats(1e-3, 1e3), st.floats(0.05, 0.95))
def test_factored_eigh_graded(n, top, ratio):
    # strongly graded factor: eigenvalues span many decades
    a = top * ratio ** np.arange(n)
    b = 0.5 * top * ratio ** np.arange(1, n)
    w, z = factored_eigh(a, b)
    A = np.diag(a) - np.diag(b, 1)
    H = A.T @ A
    np.testing.assert_allclose(w, np.linalg.eigvalsh(H), atol=1e-12 * np.abs(H).max())
    assert np.abs(z.T @ z - np.eye(n)).max() <= 1e-12
