"""Reference parameter sets for sweeps, tests and experiment scripts.

Each family has three admissible parameter choices. For q-families the
choices are expressed relative to ``q`` (and ``N``) so that they stay inside
the admissible region for every ``q`` in ``(0, 1)``.
"""
from __future__ import annotations

from typing import Iterator

from .families import (
    FINITE_FAMILIES,
    SEMI_INFINITE_FAMILIES,
    FamilyId,
    FamilyInstance,
    validate,
)

DEFAULT_Q = 0.7
Q_GRID = (0.3, 0.7, 0.9)
N_GRID = (4, 8, 16)
N_VARIANTS = 3


def sample_params(family: FamilyId | str, variant: int = 0, *, N: int | None = None,
                  q: float = DEFAULT_Q) -> dict[str, float]:
    """Admissible parameters for ``family``; ``variant`` selects one of three sets."""
    fid = FamilyId.parse(family)
    v = variant % N_VARIANTS
    I = FamilyId
    if fid is I.Krawtchouk:
        return {"p": (0.5, 0.3, 0.8)[v]}
    if fid in (I.Hahn, I.DualHahn):
        a, b = ((1.0, 1.0), (1.5, 0.7), (0.5, 2.5))[v]
        return {"a": a, "b": b}
    if fid is I.Racah:
        d, b, gap = ((0.5, 0.8, 1.3), (1.0, 1.2, 0.5), (2.0, 0.4, 3.0))[v]
        return {"a": N + d + gap, "b": b, "d": d}
    if fid is I.Meixner:
        beta, c = ((1.0, 0.5), (2.5, 0.3), (0.5, 0.7))[v]
        return {"beta": beta, "c": c}
    if fid is I.Charlier:
        return {"a": (1.0, 2.0, 0.5)[v]}
    if fid is I.QuantumQKrawtchouk:
        return {"p": (2.0, 1.3, 5.0)[v] * q**-N, "q": q}
    if fid is I.QKrawtchouk:
        return {"p": (0.6, 0.2, 2.0)[v], "q": q}
    if fid is I.AffineQKrawtchouk:
        return {"p": (0.5, 0.2, 0.9)[v] / q, "q": q}
    if fid in (I.QHahn, I.DualQHahn):
        a, b = ((0.4, 0.6), (0.2, 0.9), (0.8, 0.3))[v]
        return {"a": a, "b": b, "q": q}
    if fid is I.QRacah:
        d, fa, fb = ((0.5, 0.9, 0.6), (0.3, 0.5, 0.3), (0.8, 0.2, 0.9))[v]
        return {"a": fa * q**N * d, "b": q * d + (1 - q * d) * fb, "d": d, "q": q}
    if fid is I.LittleQJacobi:
        fa, b = ((0.5, 0.3), (0.2, 0.8), (0.9, -0.5))[v]
        return {"a": fa / q, "b": b, "q": q}
    if fid in (I.LittleQLaguerre, I.AlSalamCarlitzII):
        return {"a": (0.5, 0.2, 0.9)[v] / q, "q": q}
    raise ValueError(fid)  # pragma: no cover


def sample_instance(family: FamilyId | str, variant: int = 0, *, N: int = 8,
                    q: float = DEFAULT_Q, **truncation) -> FamilyInstance:
    fid = FamilyId.parse(family)
    if fid in FINITE_FAMILIES:
        return validate(fid, sample_params(fid, variant, N=N, q=q), N)
    return validate(fid, sample_params(fid, variant, q=q), **truncation)


def _qs(fid: FamilyId, qs) -> tuple:
    from .families import FAMILIES

    return tuple(qs) if FAMILIES[fid].q_family else (None,)


def finite_matrix(Ns=N_GRID, qs=Q_GRID, variants=range(N_VARIANTS)) -> Iterator[FamilyInstance]:
    """Every finite family x parameter set x N (x q for q-families)."""
    for fid in FINITE_FAMILIES:
        for N in Ns:
            for q in _qs(fid, qs):
                for v in variants:
                    yield sample_instance(fid, v, N=N, q=DEFAULT_Q if q is None else q)


def semi_infinite_matrix(qs=Q_GRID, variants=range(N_VARIANTS), **truncation) -> Iterator[FamilyInstance]:
    for fid in SEMI_INFINITE_FAMILIES:
        for q in _qs(fid, qs):
            for v in variants:
                yield sample_instance(fid, v, q=DEFAULT_Q if q is None else q, **truncation)
