import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from askey_lattice import families as fam
from askey_lattice.errors import LatticeRangeError, ModeCapExceeded, ParameterOutOfRange
from askey_lattice.families import FamilyId
from askey_lattice.testbed import sample_instance

# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

finite_ids = st.sampled_from(fam.FINITE_FAMILIES)
semi_ids = st.sampled_from(fam.SEMI_INFINITE_FAMILIES)
variants = st.integers(0, 2)
qs = st.sampled_from((0.3, 0.5, 0.7, 0.9))


@st.composite
def finite_instances(draw, max_N=12):
    fid = draw(finite_ids)
    N = draw(st.integers(1, max_N))
    return sample_instance(fid, draw(variants), N=N, q=draw(qs))


@st.composite
def semi_instances(draw):
    fid = draw(semi_ids)
    return sample_instance(fid, draw(variants), q=draw(qs), min_modes=4)


any_instances = st.one_of(finite_instances(), semi_instances())


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------


def K(N=4, p=0.5):
    return fam.validate("krawtchouk", {"p": p}, N)


def test_validate_accepts_and_rejects():
    assert K().lattice == fam.Finite(4)
    with pytest.raises(ParameterOutOfRange, match="0<p<1"):
        K(p=1.2)
    with pytest.raises(ParameterOutOfRange, match="a>N\\+d"):
        fam.validate("racah", {"a": 3.0, "b": 0.5, "d": 1.0}, 4)


def test_validate_structure_errors():
    with pytest.raises(ParameterOutOfRange):
        fam.validate("krawtchouk", {}, 4)
    with pytest.raises(ParameterOutOfRange):
        fam.validate("krawtchouk", {"p": 0.5, "q": 0.5}, 4)
    with pytest.raises(ParameterOutOfRange):
        fam.validate("krawtchouk", {"p": 0.5})
    with pytest.raises(ParameterOutOfRange):
        fam.validate("charlier", {"a": 1.0}, 4)
    with pytest.raises(ParameterOutOfRange, match="0<q<1"):
        fam.validate("q-krawtchouk", {"p": 0.5, "q": 1.0}, 4)
    with pytest.raises(ParameterOutOfRange):
        fam.validate("no-such-family", {}, 4)


def test_family_tags():
    assert len(FamilyId) == 15
    assert len(fam.FINITE_FAMILIES) == 10
    assert {f.value for f in fam.SEMI_INFINITE_FAMILIES} == {
        "meixner", "charlier", "little-q-jacobi", "little-q-laguerre", "al-salam-carlitz-ii"}
    assert FamilyId.parse("QRacah") is FamilyId.QRacah
    assert FamilyId.parse("qr") is FamilyId.QRacah


def test_coefficient_examples():
    k = K()
    assert fam.coeff_B(k, 1) == 1.5
    assert fam.coeff_B(k, 4) == 0.0
    assert fam.coeff_D(k, 2) == 1.0
    c = fam.validate("charlier", {"a": 1.0})
    assert fam.coeff_B(c, 7) == 1.0
    assert fam.coeff_D(c, 3) == 3.0
    with pytest.raises(LatticeRangeError):
        fam.coeff_B(k, 5)


def test_eta_and_energy_examples():
    dh = fam.validate("dual-hahn", {"a": 1.5, "b": 0.7}, 5)
    assert fam.eta(dh, 2) == pytest.approx(2 * (2 + 1.5 + 0.7 - 1), rel=1e-15)
    lql = fam.validate("little-q-laguerre", {"a": 1.0, "q": 0.5})
    assert fam.eta(lql, 2) == pytest.approx(0.75, rel=1e-15)
    h = fam.validate("hahn", {"a": 1.0, "b": 1.0}, 3)
    assert fam.energy(h, 2) == pytest.approx(6.0, rel=1e-15)
    asc = fam.validate("al-salam-carlitz-ii", {"a": 1.0, "q": 0.5})
    assert fam.energy(asc, 2) == pytest.approx(0.75, rel=1e-15)


def test_poly_weight_norm_examples():
    k1 = K(N=1)
    assert fam.poly(k1, 1, 1) == pytest.approx(-1.0, abs=1e-15)
    assert fam.weight(k1, 1) == pytest.approx(1.0, rel=1e-15)
    assert fam.norm_sq(k1, 0) == pytest.approx(0.5, rel=1e-15)
    assert fam.norm_sq(k1, 1) == pytest.approx(0.5, rel=1e-15)
    assert fam.leading_coeff(k1, 1) == pytest.approx(-2.0, rel=1e-15)
    c1 = fam.validate("charlier", {"a": 1.0})
    assert fam.weight(c1, 3) == pytest.approx(1 / 6, rel=1e-14)
    assert fam.norm_sq(c1, 0) == pytest.approx(math.exp(-1), rel=1e-14)
    c2 = fam.validate("charlier", {"a": 2.0})
    assert fam.leading_coeff(c2, 3) == pytest.approx(-1 / 8, rel=1e-14)


def test_semi_infinite_truncation_and_cap():
    c = fam.validate("charlier", {"a": 1.0})
    assert c.lattice.tail_bound < 1e-14
    assert c.lattice.M >= 2
    from askey_lattice.spectral import analytic_eigensystem

    # closed forms exist for every n; eigenvectors stop at the exposed cap
    assert fam.norm_sq(c, c.n_max + 1) > 0
    with pytest.raises(ModeCapExceeded):
        analytic_eigensystem(c, c.n_modes + 1)
    grown = fam.validate("charlier", {"a": 1.0}, min_modes=6)
    assert grown.n_max >= 5 and grown.lattice.M >= c.lattice.M


def test_truncation_failure():
    from askey_lattice.errors import TruncationFailure

    with pytest.raises(TruncationFailure):
        fam.validate("charlier", {"a": 2.0}, M_max=3)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


@given(any_instances)
def test_boundary_and_positivity(inst):
    xs = list(fam.sites(inst))
    assert fam.coeff_D(inst, 0) == 0.0
    if inst.finite:
        assert fam.coeff_B(inst, xs[-1]) == 0.0
    for x in xs[:-1]:
        assert fam.coeff_B(inst, x) > 0
    for x in xs[1:]:
        assert fam.coeff_D(inst, x) > 0


@given(any_instances)
def test_eta_energy_monotone(inst):
    assert fam.eta(inst, 0) == 0.0
    assert fam.energy(inst, 0) == 0.0
    etas = [fam.eta(inst, x) for x in fam.sites(inst)]
    es = [fam.energy(inst, n) for n in fam.modes(inst)]
    for a, b in zip(etas, etas[1:]):
        # 1 - q^x saturates in double once q^x drops below the rounding unit
        assert b > a or (b == a and 1.0 - a <= 1e-15)
    assert all(b > a for a, b in zip(es, es[1:]))


@given(any_instances)
def test_weight_matches_running_product(inst):
    for x in fam.sites(inst):
        w = fam.weight(inst, x)
        assert w > 0
        assert w == pytest.approx(fam.weight_product(inst, x), rel=1e-10)
    assert fam.sqrt_weight(inst, 0) == 1.0


@given(any_instances)
def test_polynomial_normalisation(inst):
    for n in fam.modes(inst):
        assert fam.poly(inst, n, 0) == pytest.approx(1.0, rel=1e-12)
    for x in fam.sites(inst):
        assert fam.poly(inst, 0, x) == 1.0


@given(any_instances)
def test_orthogonality(inst):
    xs = list(fam.sites(inst))
    ns = list(fam.modes(inst))
    F = np.array([[fam.sqrt_weight(inst, x) * fam.poly(inst, n, x) * math.sqrt(fam.norm_sq(inst, n))
                   for n in ns] for x in xs])
    G = F.T @ F
    assert np.abs(G - np.eye(len(ns))).max() <= 1e-9


@given(any_instances)
def test_difference_equation(inst):
    for n in fam.modes(inst):
        assert fam.difference_residual(inst, n) <= 1e-9


def _divided_difference(inst, n):
    with mpmath.workprec(200):
        pts = [mpmath.mpf(fam.eta(inst, x)) for x in range(n + 1)]
        c = [mpmath.mpf(fam.poly_any(inst, n, x)) for x in range(n + 1)]
        for j in range(1, n + 1):
            for i in range(n, j - 1, -1):
                c[i] = (c[i] - c[i - 1]) / (pts[i] - pts[i - j])
        return float(c[n])


@given(finite_instances(max_N=6))
def test_leading_coefficient_is_divided_difference(inst):
    for n in fam.modes(inst):
        assert _divided_difference(inst, n) == pytest.approx(fam.leading_coeff(inst, n), rel=1e-8)


@given(semi_instances())
def test_leading_coefficient_semi_infinite(inst):
    for n in range(min(inst.n_max, 5) + 1):
        assert _divided_difference(inst, n) == pytest.approx(fam.leading_coeff(inst, n), rel=1e-8)
