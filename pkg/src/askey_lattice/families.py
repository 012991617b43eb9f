"""Closed-form data of the fifteen discrete Askey-scheme families.

Each family supplies the difference-equation coefficients ``B(x)``, ``D(x)``,
the sinusoidal coordinate ``eta(x)``, the spectrum ``E(n)``, the polynomial
``P_n(eta(x))`` as a terminating (basic) hypergeometric series, the
orthogonality weight ``phi_0(x)^2``, the normalisation ``d_n^2`` and the
leading coefficient ``alpha_n`` of ``P_n`` in powers of ``eta``.

Finite families live on ``{0, ..., N}``. Semi-infinite families are worked on
a truncated lattice ``{0, ..., M}`` whose tail weight is certified below a
tolerance, and expose only the low modes whose amplitude at the cut is
negligible.
"""
from __future__ import annotations

import enum
import functools
import math
import threading
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Callable, Mapping

import mpmath

from .errors import LatticeRangeError, ModeCapExceeded, ParameterOutOfRange, TruncationFailure
from .series import (
    Series,
    SignedLog,
    binom,
    factorial,
    multi_poch,
    multi_qpoch,
    poch,
    power,
    qbinom,
    qpoch,
    qpoch_inf,
)

# bits of cancellation tolerated in the double-precision series pass
CANCELLATION_BITS = 8
GUARD_BITS = 40
MAX_PREC = 1 << 15

DEFAULT_EPS_TAIL = 1e-14
DEFAULT_M_MAX = 500
MODE_CUTOFF = 1e-8


class FamilyId(enum.Enum):
    Krawtchouk = "krawtchouk"
    Hahn = "hahn"
    DualHahn = "dual-hahn"
    Racah = "racah"
    Meixner = "meixner"
    Charlier = "charlier"
    QuantumQKrawtchouk = "quantum-q-krawtchouk"
    QKrawtchouk = "q-krawtchouk"
    AffineQKrawtchouk = "affine-q-krawtchouk"
    QHahn = "q-hahn"
    DualQHahn = "dual-q-hahn"
    QRacah = "q-racah"
    LittleQJacobi = "little-q-jacobi"
    LittleQLaguerre = "little-q-laguerre"
    AlSalamCarlitzII = "al-salam-carlitz-ii"

    @classmethod
    def parse(cls, tag: "str | FamilyId") -> "FamilyId":
        if isinstance(tag, FamilyId):
            return tag
        key = str(tag).strip()
        alias = _ALIASES.get(key.lower())
        if alias:
            return cls(alias)
        for member in cls:
            if key in (member.value, member.name) or key.lower() == member.name.lower():
                return member
        raise ParameterOutOfRange(f"unknown family {tag!r}")


_ALIASES = {
    "k": "krawtchouk", "h": "hahn", "dh": "dual-hahn", "r": "racah",
    "m": "meixner", "c": "charlier", "qqk": "quantum-q-krawtchouk",
    "qk": "q-krawtchouk", "aqk": "affine-q-krawtchouk", "qh": "q-hahn",
    "dqh": "dual-q-hahn", "qr": "q-racah", "lqj": "little-q-jacobi",
    "lql": "little-q-laguerre", "asc": "al-salam-carlitz-ii",
}


# ---------------------------------------------------------------------------
# family tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Family:
    """Closed forms of one family; ``p`` is a namespace with params and ``N``."""

    id: FamilyId
    finite: bool
    params: tuple[str, ...]
    constraints: tuple[tuple[str, Callable], ...]
    B: Callable
    D: Callable
    eta: Callable
    energy: Callable
    series: Callable
    log_weight: Callable
    log_norm: Callable
    leading: Callable
    q_family: bool = False
    ratio_limit: Callable | None = None
    energy_sup: Callable | None = None



# Krawtchouk ---------------------------------------------------------------

_K = _Family(
    id=FamilyId.Krawtchouk,
    finite=True,
    params=("p",),
    constraints=(("0<p<1", lambda p: 0 < p.p < 1),),
    B=lambda p, x: p.p * (p.N - x),
    D=lambda p, x: (1 - p.p) * x,
    eta=lambda p, x: x,
    energy=lambda p, n: n,
    series=lambda p, n, x: Series([-n, -x], [-p.N], 1 / p.p, min(n, x) + 1),
    log_weight=lambda p, x: binom(p.N, x) * power(p.p / (1 - p.p), x),
    log_norm=lambda p, n: binom(p.N, n) * power(p.p / (1 - p.p), n) * power(1 - p.p, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.p, -n)
    * factorial(p.N - n)
    / factorial(p.N),
)

# Hahn ---------------------------------------------------------------------


def _hahn_norm(p, n):
    a, b, N = p.a, p.b, p.N
    s = a + b - 1
    # (2n+s)/(n+s)_{N+1} = [(2n+s)/(n+s)] / (n+s+1)_N, the bracket being 1 at n=0
    bracket = SignedLog.of(2 * n + s) / SignedLog.of(n + s) if n else SignedLog()
    return binom(N, n) * poch(a, n) / poch(b, n) * bracket / poch(n + s + 1, N) * poch(b, N)


_H = _Family(
    id=FamilyId.Hahn,
    finite=True,
    params=("a", "b"),
    constraints=(("a>0", lambda p: p.a > 0), ("b>0", lambda p: p.b > 0)),
    B=lambda p, x: (x + p.a) * (p.N - x),
    D=lambda p, x: x * (p.b + p.N - x),
    eta=lambda p, x: x,
    energy=lambda p, n: n * (n + p.a + p.b - 1),
    series=lambda p, n, x: Series([-n, n + p.a + p.b - 1, -x], [p.a, -p.N], 1.0, min(n, x) + 1),
    log_weight=lambda p, x: binom(p.N, x) * poch(p.a, x) * poch(p.b, p.N - x) / poch(p.b, p.N),
    log_norm=_hahn_norm,
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * poch(n + p.a + p.b - 1, n)
    * factorial(p.N - n)
    / (poch(p.a, n) * factorial(p.N)),
)

# dual Hahn ----------------------------------------------------------------


def _dh_B(p, x):
    a, b, N = p.a, p.b, p.N
    if x == 0:
        return a * N / (a + b)
    return (x + a) * (x + a + b - 1) * (N - x) / ((2 * x - 1 + a + b) * (2 * x + a + b))


def _dh_D(p, x):
    a, b, N = p.a, p.b, p.N
    if x == 0:
        return 0.0 * a
    return x * (x + b - 1) * (x + a + b + N - 1) / ((2 * x - 2 + a + b) * (2 * x - 1 + a + b))


def _dh_weight(p, x):
    a, b, N = p.a, p.b, p.N
    s = a + b - 1
    bracket = SignedLog.of(2 * x + s) / SignedLog.of(x + s) if x else SignedLog()
    return binom(N, x) * poch(a, x) / poch(b, x) * bracket * poch(a + b, N) / poch(x + s + 1, N)


_DH = _Family(
    id=FamilyId.DualHahn,
    finite=True,
    params=("a", "b"),
    constraints=(("a>0", lambda p: p.a > 0), ("b>0", lambda p: p.b > 0)),
    B=_dh_B,
    D=_dh_D,
    eta=lambda p, x: x * (x + p.a + p.b - 1),
    energy=lambda p, n: n,
    series=lambda p, n, x: Series([-n, x + p.a + p.b - 1, -x], [p.a, -p.N], 1.0, min(n, x) + 1),
    log_weight=_dh_weight,
    log_norm=lambda p, n: binom(p.N, n) * poch(p.a, n) * poch(p.b, p.N - n) / poch(p.a + p.b, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0) * factorial(p.N - n) / (poch(p.a, n) * factorial(p.N)),
)

# Racah --------------------------------------------------------------------


def _racah_dt(p):
    return p.a + p.b - p.N - p.d - 1


def _racah_B(p, x):
    a, b, d, N = p.a, p.b, p.d, p.N
    return -(x + a) * (x + b) * (x - N) * (x + d) / ((2 * x + d) * (2 * x + d + 1))


def _racah_D(p, x):
    a, b, d, N = p.a, p.b, p.d, p.N
    if x == 0:
        return 0.0 * a
    return -(x + d - a) * (x + d - b) * (x + d + N) * x / ((2 * x + d - 1) * (2 * x + d))


def _racah_weight(p, x):
    a, b, d, N = p.a, p.b, p.d, p.N
    return (
        multi_poch([a, b, -N, d], x)
        / multi_poch([1 + d - a, 1 + d - b, 1 + d + N, 1], x)
        * SignedLog.of((2 * x + d) / d)
    )


def _racah_norm(p, n):
    a, b, d, N = p.a, p.b, p.d, p.N
    dt = _racah_dt(p)
    # (dt)_n (2n+dt)/dt with the removable dt=0 singularity cleared
    head = poch(dt + 1, n - 1) * SignedLog.of(2 * n + dt) if n else SignedLog()
    return (
        multi_poch([a, b, -N], n)
        * head
        / multi_poch([1 + dt - a, 1 + dt - b, 1 + dt + N, 1], n)
        * SignedLog((-1) ** N, 0.0)
        * multi_poch([1 + d - a, 1 + d - b, 1 + d + N], N)
        / (poch(dt + 1, N) * poch(d + 1, 2 * N))
    )


_R = _Family(
    id=FamilyId.Racah,
    finite=True,
    params=("a", "b", "d"),
    constraints=(
        ("d>0", lambda p: p.d > 0),
        ("a>N+d", lambda p: p.a > p.N + p.d),
        ("0<b<1+d", lambda p: 0 < p.b < 1 + p.d),
    ),
    B=_racah_B,
    D=_racah_D,
    eta=lambda p, x: x * (x + p.d),
    energy=lambda p, n: n * (n + _racah_dt(p)),
    series=lambda p, n, x: Series(
        [-n, n + _racah_dt(p), -x, x + p.d], [p.a, p.b, -p.N], 1.0, min(n, x) + 1
    ),
    log_weight=_racah_weight,
    log_norm=_racah_norm,
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * poch(n + _racah_dt(p), n)
    * factorial(p.N - n)
    / (poch(p.a, n) * poch(p.b, n) * factorial(p.N)),
)

# quantum q-Krawtchouk -----------------------------------------------------

_QQK = _Family(
    id=FamilyId.QuantumQKrawtchouk,
    finite=True,
    q_family=True,
    params=("p", "q"),
    constraints=(("p>q^{-N}", lambda p: p.p > p.q ** (-p.N)),),
    B=lambda p, x: p.q**x * (p.q ** (x - p.N) - 1) / p.p,
    D=lambda p, x: (1 - p.q**x) * (1 - p.q ** (x - p.N - 1) / p.p),
    eta=lambda p, x: p.q ** (-x) - 1,
    energy=lambda p, n: 1 - p.q**n,
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.q ** (-x)], [p.q ** (-p.N)], p.p * p.q ** (n + 1), min(n, x) + 1, q=p.q
    ),
    log_weight=lambda p, x: qbinom(p.N, x, p.q)
    * power(p.p, -x)
    * power(p.q, x * (x - 1 - p.N))
    / qpoch(p.q ** (-p.N) / p.p, p.q, x),
    log_norm=lambda p, n: qbinom(p.N, n, p.q)
    * power(p.p, -n)
    * power(p.q, -p.N * n)
    / qpoch(p.q ** (-n) / p.p, p.q, n)
    * qpoch(p.q ** (-p.N) / p.p, p.q, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.p, n)
    * power(p.q, n * (p.N + 1) + n * (n - 1) / 2)
    * qpoch(p.q, p.q, p.N - n)
    / qpoch(p.q, p.q, p.N),
    energy_sup=lambda p: 1.0,
)

# q-Krawtchouk -------------------------------------------------------------

_QK = _Family(
    id=FamilyId.QKrawtchouk,
    finite=True,
    q_family=True,
    params=("p", "q"),
    constraints=(("p>0", lambda p: p.p > 0),),
    B=lambda p, x: p.q ** (x - p.N) - 1,
    D=lambda p, x: p.p * (1 - p.q**x),
    eta=lambda p, x: p.q ** (-x) - 1,
    energy=lambda p, n: (p.q ** (-n) - 1) * (1 + p.p * p.q**n),
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.q ** (-x), -p.p * p.q**n], [p.q ** (-p.N), 0.0], p.q, min(n, x) + 1, q=p.q
    ),
    log_weight=lambda p, x: qbinom(p.N, x, p.q) * power(p.p, -x) * power(p.q, x * (x - 1) / 2 - x * p.N),
    log_norm=lambda p, n: qbinom(p.N, n, p.q)
    * qpoch(-p.p, p.q, n)
    / (qpoch(-p.p * p.q ** (p.N + 1), p.q, n) * power(p.p, n) * power(p.q, n * (n + 1) / 2))
    * SignedLog.of((1 + p.p * p.q ** (2 * n)) / (1 + p.p))
    * power(p.p, p.N)
    * power(p.q, p.N * (p.N + 1) / 2)
    / qpoch(-p.p * p.q, p.q, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.q, n * (p.N - n + 1) + n * (n - 1) / 2)
    * qpoch(-p.p * p.q**n, p.q, n)
    * qpoch(p.q, p.q, p.N - n)
    / qpoch(p.q, p.q, p.N),
)

# affine q-Krawtchouk ------------------------------------------------------

_AQK = _Family(
    id=FamilyId.AffineQKrawtchouk,
    finite=True,
    q_family=True,
    params=("p", "q"),
    constraints=(("0<p<q^{-1}", lambda p: 0 < p.p < 1 / p.q),),
    B=lambda p, x: (p.q ** (x - p.N) - 1) * (1 - p.p * p.q ** (x + 1)),
    D=lambda p, x: p.p * p.q ** (x - p.N) * (1 - p.q**x),
    eta=lambda p, x: p.q ** (-x) - 1,
    energy=lambda p, n: p.q ** (-n) - 1,
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.q ** (-x), 0.0], [p.p * p.q, p.q ** (-p.N)], p.q, min(n, x) + 1, q=p.q
    ),
    log_weight=lambda p, x: qbinom(p.N, x, p.q) * qpoch(p.p * p.q, p.q, x) / power(p.p * p.q, x),
    log_norm=lambda p, n: qbinom(p.N, n, p.q)
    * qpoch(p.p * p.q, p.q, n)
    / power(p.p * p.q, n)
    * power(p.p * p.q, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.q, n * (p.N - n + 1) + n * (n - 1) / 2)
    * qpoch(p.q, p.q, p.N - n)
    / (qpoch(p.p * p.q, p.q, n) * qpoch(p.q, p.q, p.N)),
)

# q-Hahn -------------------------------------------------------------------


def _qh_norm(p, n):
    a, b, q, N = p.a, p.b, p.q, p.N
    ab = a * b
    # (ab/q;q)_n (1-ab q^{2n-1})/(1-ab/q) = (ab;q)_{n-1}(1-ab q^{2n-1}) for n>=1
    head = qpoch(ab, q, n - 1) * SignedLog.of(1 - ab * q ** (2 * n - 1)) if n else SignedLog()
    return (
        qbinom(N, n, q)
        * qpoch(a, q, n)
        * head
        / (multi_qpoch([ab * q**N, b], q, n) * power(a, n))
        * qpoch(b, q, N)
        * power(a, N)
        / qpoch(ab, q, N)
    )


_QH = _Family(
    id=FamilyId.QHahn,
    finite=True,
    q_family=True,
    params=("a", "b", "q"),
    constraints=(("0<a<1", lambda p: 0 < p.a < 1), ("0<b<1", lambda p: 0 < p.b < 1)),
    B=lambda p, x: (1 - p.a * p.q**x) * (p.q ** (x - p.N) - 1),
    D=lambda p, x: p.a / p.q * (1 - p.q**x) * (p.q ** (x - p.N) - p.b),
    eta=lambda p, x: p.q ** (-x) - 1,
    energy=lambda p, n: (p.q ** (-n) - 1) * (1 - p.a * p.b * p.q ** (n - 1)),
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.a * p.b * p.q ** (n - 1), p.q ** (-x)],
        [p.a, p.q ** (-p.N)],
        p.q,
        min(n, x) + 1,
        q=p.q,
    ),
    log_weight=lambda p, x: qbinom(p.N, x, p.q)
    * qpoch(p.a, p.q, x)
    * qpoch(p.b, p.q, p.N - x)
    / (qpoch(p.b, p.q, p.N) * power(p.a, x)),
    log_norm=_qh_norm,
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.q, n * (p.N - n + 1) + n * (n - 1) / 2)
    * qpoch(p.a * p.b * p.q ** (n - 1), p.q, n)
    * qpoch(p.q, p.q, p.N - n)
    / (qpoch(p.a, p.q, n) * qpoch(p.q, p.q, p.N)),
)

# dual q-Hahn --------------------------------------------------------------


def _dqh_B(p, x):
    a, b, q, N = p.a, p.b, p.q, p.N
    ab = a * b
    if x == 0:
        return (q ** (-N) - 1) * (1 - a) / (1 - ab)
    return (
        (q ** (x - N) - 1)
        * (1 - a * q**x)
        * (1 - ab * q ** (x - 1))
        / ((1 - ab * q ** (2 * x - 1)) * (1 - ab * q ** (2 * x)))
    )


def _dqh_D(p, x):
    a, b, q, N = p.a, p.b, p.q, p.N
    ab = a * b
    if x == 0:
        return 0.0 * a
    return (
        a
        * q ** (x - N - 1)
        * (1 - q**x)
        * (1 - ab * q ** (x + N - 1))
        * (1 - b * q ** (x - 1))
        / ((1 - ab * q ** (2 * x - 2)) * (1 - ab * q ** (2 * x - 1)))
    )


def _dqh_weight(p, x):
    a, b, q, N = p.a, p.b, p.q, p.N
    ab = a * b
    head = qpoch(ab, q, x - 1) * SignedLog.of(1 - ab * q ** (2 * x - 1)) if x else SignedLog()
    return qbinom(N, x, q) * qpoch(a, q, x) * head / (multi_qpoch([ab * q**N, b], q, x) * power(a, x))


_DQH = _Family(
    id=FamilyId.DualQHahn,
    finite=True,
    q_family=True,
    params=("a", "b", "q"),
    constraints=(("0<a<1", lambda p: 0 < p.a < 1), ("0<b<1", lambda p: 0 < p.b < 1)),
    B=_dqh_B,
    D=_dqh_D,
    eta=lambda p, x: (p.q ** (-x) - 1) * (1 - p.a * p.b * p.q ** (x - 1)),
    energy=lambda p, n: p.q ** (-n) - 1,
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.a * p.b * p.q ** (x - 1), p.q ** (-x)],
        [p.a, p.q ** (-p.N)],
        p.q,
        min(n, x) + 1,
        q=p.q,
    ),
    log_weight=_dqh_weight,
    log_norm=lambda p, n: qbinom(p.N, n, p.q)
    * qpoch(p.a, p.q, n)
    * qpoch(p.b, p.q, p.N - n)
    / power(p.a, n)
    * power(p.a, p.N)
    / qpoch(p.a * p.b, p.q, p.N),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.q, n * (p.N - n + 1) + n * (n - 1) / 2)
    * qpoch(p.q, p.q, p.N - n)
    / (qpoch(p.a, p.q, n) * qpoch(p.q, p.q, p.N)),
)

# q-Racah ------------------------------------------------------------------


def _qr_dt(p):
    return p.a * p.b / p.d * p.q ** (-p.N - 1)


def _qr_B(p, x):
    a, b, d, q, N = p.a, p.b, p.d, p.q, p.N
    return -(
        (1 - a * q**x) * (1 - b * q**x) * (1 - q ** (x - N)) * (1 - d * q**x)
    ) / ((1 - d * q ** (2 * x)) * (1 - d * q ** (2 * x + 1)))


def _qr_D(p, x):
    a, b, d, q, N = p.a, p.b, p.d, p.q, p.N
    if x == 0:
        return 0.0 * a
    dt = _qr_dt(p)
    return -dt * (
        (1 - d * q**x / a) * (1 - d * q**x / b) * (1 - d * q ** (N + x)) * (1 - q**x)
    ) / ((1 - d * q ** (2 * x - 1)) * (1 - d * q ** (2 * x)))


def _qr_weight(p, x):
    a, b, d, q, N = p.a, p.b, p.d, p.q, p.N
    dt = _qr_dt(p)
    return (
        multi_qpoch([a, b, q ** (-N), d], q, x)
        / (multi_qpoch([d * q / a, d * q / b, d * q ** (N + 1), q], q, x) * power(dt, x))
        * SignedLog.of((1 - d * q ** (2 * x)) / (1 - d))
    )


def _qr_norm(p, n):
    a, b, d, q, N = p.a, p.b, p.d, p.q, p.N
    dt = _qr_dt(p)
    # (dt;q)_n (1-dt q^{2n})/(1-dt) = (dt q;q)_{n-1}(1-dt q^{2n}) for n>=1
    head = qpoch(dt * q, q, n - 1) * SignedLog.of(1 - dt * q ** (2 * n)) if n else SignedLog()
    return (
        multi_qpoch([a, b, q ** (-N)], q, n)
        * head
        / (multi_qpoch([dt * q / a, dt * q / b, dt * q ** (N + 1), q], q, n) * power(d, n))
        * SignedLog((-1) ** N, 0.0)
        * multi_qpoch([d * q / a, d * q / b, d * q ** (N + 1)], q, N)
        * power(dt, N)
        * power(q, N * (N + 1) / 2)
        / (qpoch(dt * q, q, N) * qpoch(d * q, q, 2 * N))
    )


_QR = _Family(
    id=FamilyId.QRacah,
    finite=True,
    q_family=True,
    params=("a", "b", "d", "q"),
    constraints=(
        ("0<d<1", lambda p: 0 < p.d < 1),
        ("0<a<q^N d", lambda p: 0 < p.a < p.q**p.N * p.d),
        ("qd<b<1", lambda p: p.q * p.d < p.b < 1),
    ),
    B=_qr_B,
    D=_qr_D,
    eta=lambda p, x: (p.q ** (-x) - 1) * (1 - p.d * p.q**x),
    energy=lambda p, n: (p.q ** (-n) - 1) * (1 - _qr_dt(p) * p.q**n),
    series=lambda p, n, x: Series(
        [p.q ** (-n), _qr_dt(p) * p.q**n, p.q ** (-x), p.d * p.q**x],
        [p.a, p.b, p.q ** (-p.N)],
        p.q,
        min(n, x) + 1,
        q=p.q,
    ),
    log_weight=_qr_weight,
    log_norm=_qr_norm,
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.q, n * (p.N - n + 1) + n * (n - 1) / 2)
    * qpoch(_qr_dt(p) * p.q**n, p.q, n)
    * qpoch(p.q, p.q, p.N - n)
    / (qpoch(p.a, p.q, n) * qpoch(p.b, p.q, n) * qpoch(p.q, p.q, p.N)),
)

# Meixner ------------------------------------------------------------------

_M = _Family(
    id=FamilyId.Meixner,
    finite=False,
    params=("beta", "c"),
    constraints=(("beta>0", lambda p: p.beta > 0), ("0<c<1", lambda p: 0 < p.c < 1)),
    B=lambda p, x: p.c / (1 - p.c) * (x + p.beta),
    D=lambda p, x: x / (1 - p.c),
    eta=lambda p, x: x,
    energy=lambda p, n: n,
    series=lambda p, n, x: Series([-n, -x], [p.beta], 1 - 1 / p.c, min(n, x) + 1),
    log_weight=lambda p, x: poch(p.beta, x) * power(p.c, x) / factorial(x),
    log_norm=lambda p, n: poch(p.beta, n) * power(p.c, n) / factorial(n) * power(1 - p.c, p.beta),
    leading=lambda p, n: SignedLog.of(1 - 1 / p.c) ** n / poch(p.beta, n),
    ratio_limit=lambda p: p.c,
)

# Charlier -----------------------------------------------------------------

_C = _Family(
    id=FamilyId.Charlier,
    finite=False,
    params=("a",),
    constraints=(("a>0", lambda p: p.a > 0),),
    B=lambda p, x: p.a + 0.0 * x,
    D=lambda p, x: x,
    eta=lambda p, x: x,
    energy=lambda p, n: n,
    series=lambda p, n, x: Series([-n, -x], [], -1 / p.a, min(n, x) + 1),
    log_weight=lambda p, x: power(p.a, x) / factorial(x),
    log_norm=lambda p, n: power(p.a, n) / factorial(n) * SignedLog(1, -p.a),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0) * power(p.a, -n),
    ratio_limit=lambda p: 0.0,
)

# little q-Jacobi ----------------------------------------------------------


@functools.lru_cache(maxsize=4096)
def _lqj_prefactor(a: float, b: float, q: float, n: int) -> SignedLog:
    return (
        SignedLog((-1) ** n, 0.0)
        * power(a, -n)
        * power(q, -n * (n + 1) / 2)
        * qpoch(a * q, q, n)
        / qpoch(b * q, q, n)
    )


def _lqj_series(p, n, x):
    a, b, q = p.a, p.b, p.q
    pre = _lqj_prefactor(float(a), float(b), float(q), n)
    return Series([q ** (-n), a * b * q ** (n + 1)], [a * q], q ** (x + 1), n + 1, q=q, prefactor=pre)


def _lqj_norm(p, n):
    a, b, q = p.a, p.b, p.q
    ab = a * b
    head = qpoch(ab * q * q, q, n - 1) * SignedLog.of(1 - ab * q ** (2 * n + 1)) if n else SignedLog()
    return (
        qpoch(b * q, q, n)
        * head
        * power(a, n)
        * power(q, n * n)
        / multi_qpoch([q, a * q], q, n)
        * qpoch_inf(a * q, q)
        / qpoch_inf(ab * q * q, q)
    )


_LQJ = _Family(
    id=FamilyId.LittleQJacobi,
    finite=False,
    q_family=True,
    params=("a", "b", "q"),
    constraints=(("0<a<q^{-1}", lambda p: 0 < p.a < 1 / p.q), ("b<q^{-1}", lambda p: p.b < 1 / p.q)),
    B=lambda p, x: p.a * (p.q ** (-x) - p.b * p.q),
    D=lambda p, x: p.q ** (-x) - 1,
    eta=lambda p, x: 1 - p.q**x,
    energy=lambda p, n: (p.q ** (-n) - 1) * (1 - p.a * p.b * p.q ** (n + 1)),
    series=_lqj_series,
    log_weight=lambda p, x: qpoch(p.b * p.q, p.q, x) * power(p.a * p.q, x) / qpoch(p.q, p.q, x),
    log_norm=_lqj_norm,
    leading=lambda p, n: SignedLog((-1) ** n, 0.0)
    * power(p.a, -n)
    * power(p.q, -n * n)
    * qpoch(p.a * p.b * p.q ** (n + 1), p.q, n)
    / qpoch(p.b * p.q, p.q, n),
    ratio_limit=lambda p: p.a * p.q,
)

# little q-Laguerre --------------------------------------------------------

_LQL = _Family(
    id=FamilyId.LittleQLaguerre,
    finite=False,
    q_family=True,
    params=("a", "q"),
    constraints=(("0<a<q^{-1}", lambda p: 0 < p.a < 1 / p.q),),
    B=lambda p, x: p.a * p.q ** (-x),
    D=lambda p, x: p.q ** (-x) - 1,
    eta=lambda p, x: 1 - p.q**x,
    energy=lambda p, n: p.q ** (-n) - 1,
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.q ** (-x)], [], p.q**x / p.a, min(n, x) + 1, q=p.q
    ),
    log_weight=lambda p, x: power(p.a * p.q, x) / qpoch(p.q, p.q, x),
    log_norm=lambda p, n: power(p.a, n)
    * power(p.q, n * n)
    / multi_qpoch([p.q, p.a * p.q], p.q, n)
    * qpoch_inf(p.a * p.q, p.q),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0) * power(p.a, -n) * power(p.q, -n * n),
    ratio_limit=lambda p: p.a * p.q,
)

# Al-Salam-Carlitz II ------------------------------------------------------

_ASC = _Family(
    id=FamilyId.AlSalamCarlitzII,
    finite=False,
    q_family=True,
    params=("a", "q"),
    constraints=(("0<a<q^{-1}", lambda p: 0 < p.a < 1 / p.q),),
    B=lambda p, x: p.a * p.q ** (2 * x + 1),
    D=lambda p, x: (1 - p.q**x) * (1 - p.a * p.q**x),
    eta=lambda p, x: p.q ** (-x) - 1,
    energy=lambda p, n: 1 - p.q**n,
    series=lambda p, n, x: Series(
        [p.q ** (-n), p.q ** (-x)], [], p.q**n / p.a, min(n, x) + 1, q=p.q
    ),
    log_weight=lambda p, x: power(p.a, x) * power(p.q, x * x) / multi_qpoch([p.q, p.a * p.q], p.q, x),
    log_norm=lambda p, n: power(p.a * p.q, n) / qpoch(p.q, p.q, n) * qpoch_inf(p.a * p.q, p.q),
    leading=lambda p, n: SignedLog((-1) ** n, 0.0) * power(p.a, -n) * power(p.q, n * (n - 1) / 2),
    ratio_limit=lambda p: 0.0,
    energy_sup=lambda p: 1.0,
)

FAMILIES: dict[FamilyId, _Family] = {
    f.id: f
    for f in (_K, _H, _DH, _R, _QQK, _QK, _AQK, _QH, _DQH, _QR, _M, _C, _LQJ, _LQL, _ASC)
}

FINITE_FAMILIES = tuple(f for f in FamilyId if FAMILIES[f].finite)
SEMI_INFINITE_FAMILIES = tuple(f for f in FamilyId if not FAMILIES[f].finite)


def param_names(family: FamilyId) -> tuple[str, ...]:
    return FAMILIES[FamilyId.parse(family)].params


def constraint_labels(family: FamilyId) -> tuple[str, ...]:
    fam = FAMILIES[FamilyId.parse(family)]
    labels = tuple(label for label, _ in fam.constraints)
    return labels + (("0<q<1",) if fam.q_family else ())


# ---------------------------------------------------------------------------
# lattices and instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finite:
    N: int


@dataclass(frozen=True)
class SemiInfinite:
    """Working lattice ``{0..M}``; ``n_max`` is the highest exposed mode."""

    M: int
    eps_tail: float = DEFAULT_EPS_TAIL
    n_max: int = -1
    tail_bound: float = math.nan


@dataclass(frozen=True)
class FamilyInstance:
    family: FamilyId
    params: tuple[tuple[str, float], ...]
    lattice: Finite | SemiInfinite
    _ns: SimpleNamespace = field(repr=False, compare=False, default=None)

    @property
    def data(self) -> _Family:
        return FAMILIES[self.family]

    @property
    def p(self) -> SimpleNamespace:
        return self._ns

    @property
    def finite(self) -> bool:
        return isinstance(self.lattice, Finite)

    @property
    def last_site(self) -> int:
        return self.lattice.N if self.finite else self.lattice.M

    @property
    def size(self) -> int:
        return self.last_site + 1

    @property
    def n_max(self) -> int:
        return self.lattice.N if self.finite else self.lattice.n_max

    @property
    def n_modes(self) -> int:
        return self.n_max + 1

    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def with_params(self, **mp) -> "FamilyInstance":
        return replace_params(self, **mp)


def _namespace(fam: _Family, params: Mapping[str, float], N: int | None) -> SimpleNamespace:
    ns = SimpleNamespace(**{k: float(params[k]) for k in fam.params})
    ns.N = N
    return ns


def validate(
    family: "FamilyId | str",
    params: Mapping[str, float],
    N: int | None = None,
    *,
    M: int | None = None,
    eps_tail: float = DEFAULT_EPS_TAIL,
    M_max: int = DEFAULT_M_MAX,
    min_modes: int = 1,
) -> FamilyInstance:
    """Check parameters against the family's admissible range.

    Parameters
    ----------
    family : FamilyId or str
        Family tag (enum member, kebab-case value or enum name).
    params : mapping
        Parameter values keyed by lower-cased symbol name (``p``, ``a``,
        ``b``, ``c``, ``d``, ``beta``, ``q``).
    N : int, optional
        Lattice size for finite families (sites ``0..N``).
    M : int, optional
        Requested truncation for semi-infinite families. The certified
        truncation is never smaller than the tail bound requires.
    eps_tail : float
        Allowed relative weight mass beyond the truncation.
    M_max : int
        Largest truncation tried before giving up.
    min_modes : int
        Grow the truncation until at least this many modes are exposed.

    Raises
    ------
    ParameterOutOfRange
        A parameter violates its constraint; the message names it.
    TruncationFailure
        No truncation ``<= M_max`` satisfies the tail and mode requirements.
    """
    fid = FamilyId.parse(family)
    fam = FAMILIES[fid]
    missing = [k for k in fam.params if k not in params]
    if missing:
        raise ParameterOutOfRange(f"{fid.value}: missing parameter(s) {', '.join(missing)}")
    extra = sorted(set(params) - set(fam.params))
    if extra:
        raise ParameterOutOfRange(f"{fid.value}: unexpected parameter(s) {', '.join(extra)}")
    for k in fam.params:
        v = float(params[k])
        if not math.isfinite(v):
            raise ParameterOutOfRange(f"{fid.value}: parameter {k} must be finite")
    if fam.finite:
        if N is None or int(N) != N or N < 1:
            raise ParameterOutOfRange(f"{fid.value}: finite family requires integer N>=1")
        N = int(N)
    elif N is not None:
        raise ParameterOutOfRange(f"{fid.value}: semi-infinite family takes no N")
    ns = _namespace(fam, params, N)
    if fam.q_family and not 0 < ns.q < 1:
        raise ParameterOutOfRange(f"{fid.value}: violates 0<q<1 (q={ns.q})")
    for label, check in fam.constraints:
        if not check(ns):
            shown = ", ".join(f"{k}={getattr(ns, k)!r}" for k in fam.params)
            raise ParameterOutOfRange(f"{fid.value}: violates {label} ({shown}, N={N})")
    items = tuple((k, ns.__dict__[k]) for k in fam.params)
    if fam.finite:
        return FamilyInstance(fid, items, Finite(N), ns)
    lattice = _certify_truncation(fam, ns, M, eps_tail, M_max, min_modes)
    return FamilyInstance(fid, items, lattice, ns)


def replace_params(inst: FamilyInstance, **changes) -> FamilyInstance:
    params = inst.param_dict()
    params.update(changes)
    if inst.finite:
        return validate(inst.family, params, inst.lattice.N)
    return validate(inst.family, params, M=inst.lattice.M, eps_tail=inst.lattice.eps_tail)


def _certify_truncation(fam, ns, M_req, eps_tail, M_max, min_modes) -> SemiInfinite:
    if not eps_tail > 0:
        raise TruncationFailure("eps_tail must be positive")
    M_floor = max(2, M_req or 0)
    if M_floor > M_max:
        raise TruncationFailure(f"requested M={M_floor} exceeds M_max={M_max}")
    r_inf = fam.ratio_limit(ns)
    logs = []
    M_tail = None
    bound = math.nan
    for M in range(M_max + 1):
        logs.append(fam.log_weight(ns, M).log)
        if M < M_floor:
            continue
        r_M = fam.B(ns, M) / fam.D(ns, M + 1)
        rho = max(r_M, r_inf)
        if rho >= 1:
            continue
        top = max(logs)
        total = sum(math.exp(v - top) for v in logs)
        bound = math.exp(logs[-1] - top) * rho / (1 - rho) / total
        if bound < eps_tail:
            M_tail = M
            break
    if M_tail is None:
        raise TruncationFailure(
            f"{fam.id.value}: tail mass not below {eps_tail:g} within M_max={M_max}"
        )
    M = M_tail
    while True:
        n_max = _mode_cap(fam, ns, M)
        if n_max + 1 >= min_modes:
            return SemiInfinite(M=M, eps_tail=eps_tail, n_max=n_max, tail_bound=bound)
        if M >= M_max:
            raise TruncationFailure(
                f"{fam.id.value}: only {n_max + 1} mode(s) exposed at M_max={M_max}, "
                f"{min_modes} requested"
            )
        M = min(M_max, M + max(1, M // 8))


def _mode_cap(fam, ns, M: int) -> int:
    """Highest n such that every mode k<=n is below the cutoff at site M."""
    logw = fam.log_weight(ns, M).log
    n_max = -1
    for n in range(M + 1):
        amp = math.exp(0.5 * (fam.log_norm(ns, n).log + logw) + _series_log(fam, ns, n, M).log)
        if not amp < MODE_CUTOFF:
            break
        n_max = n
    return n_max


# ---------------------------------------------------------------------------
# series evaluation
# ---------------------------------------------------------------------------

_local = threading.local()


def _mp_context(prec: int) -> mpmath.ctx_mp.MPContext:
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = mpmath.MPContext()
    ctx.prec = prec
    return ctx


def _lost_bits(value, scale) -> float:
    if scale == 0:
        return 0.0
    if value == 0 or not (mpmath.isfinite(value) and mpmath.isfinite(scale)):
        return math.inf
    return float(mpmath.log(abs(scale) / abs(value), 2))


def _series_value(fam: _Family, ns: SimpleNamespace, n: int, x: int) -> float:
    """The polynomial value as a float (may overflow to ``inf``)."""
    try:
        return _series_log(fam, ns, n, x).value()
    except OverflowError:
        sl = _series_log(fam, ns, n, x)
        return math.copysign(math.inf, sl.sign)


def _series_log(fam: _Family, ns: SimpleNamespace, n: int, x: int) -> SignedLog:
    """Sum the family series, re-summing in extended precision if needed.

    The double pass is kept when the largest term exceeds the result by
    fewer than ``CANCELLATION_BITS`` bits. Otherwise the parameters are
    promoted exactly to binary floats of higher precision and the same
    term-ratio sum is repeated until the working precision covers the
    observed cancellation plus ``GUARD_BITS``.
    """
    series = fam.series(ns, n, x)
    value, scale = series.raw_sum()
    lost = _lost_bits(value, scale)
    if lost <= CANCELLATION_BITS:
        return series.scaled_log(value)
    prec = 4 * 53 if math.isinf(lost) else min(MAX_PREC, 53 + int(lost) + GUARD_BITS)
    for _ in range(16):
        ctx = _mp_context(prec)
        mp_ns = _mp_namespace(ns, ctx)
        series = fam.series(mp_ns, n, x)
        value, scale = series.raw_sum()
        if value == 0:
            # total cancellation is not evidence of a zero until MAX_PREC
            if prec >= MAX_PREC:
                return SignedLog(0, -math.inf)
            prec = min(MAX_PREC, 4 * prec)
            continue
        lost = _lost_bits(value, scale)
        if prec >= 53 + lost + GUARD_BITS - 1 or prec >= MAX_PREC:
            break
        prec = min(MAX_PREC, 53 + int(lost) + 2 * GUARD_BITS)
    return series.scaled_log(value)


def _mp_namespace(ns: SimpleNamespace, ctx) -> SimpleNamespace:
    out = SimpleNamespace(**{k: ctx.mpf(v) for k, v in vars(ns).items() if k != "N"})
    out.N = ns.N
    return out


def difference_residual(inst: "FamilyInstance", n: int) -> float:
    """Relative residual of the three-point difference equation for mode ``n``.

    ``max_x |B(x)(P(x)-P(x+1)) + D(x)(P(x)-P(x-1)) - E(n)P(x)|`` divided by
    ``max_x |E(n)P(x)|`` over the (truncated) lattice, with the boundary
    terms dropped through ``D(0) = 0`` and, for finite lattices, ``B(N) = 0``.

    The identity is evaluated in extended precision: with ``B(x)`` as large
    as ``q^{-M}`` the double-rounded differences ``P(x) - P(x+1)`` carry no
    information, whereas the closed-form data (``B``, ``D``, ``E`` and the
    series) are exact expressions that can be checked to any precision.
    """
    n = _check_mode(inst, n)
    fam_, ns = inst.data, inst.p
    xs = range(inst.size + (0 if inst.finite else 1))
    prec = 2 * 53 + GUARD_BITS
    while True:
        ctx = _mp_context(prec)
        mp_ns = _mp_namespace(ns, ctx)
        vals, lost = [], 0.0
        for x in xs:
            series = fam_.series(mp_ns, n, x)
            value, scale = series.raw_sum()
            vals.append(series.scaled(value))
            # an exact zero after cancellation forces a precision increase
            lost = max(lost, _lost_bits(value, scale) if value != 0 else 2.0 * prec)
        E = fam_.energy(mp_ns, n)
        worst = top = size = ctx.zero
        for x in range(inst.size):
            B = fam_.B(mp_ns, x)
            D = fam_.D(mp_ns, x)
            terms = [-E * vals[x]]
            if x + 1 < len(vals):
                terms += [B * vals[x], -B * vals[x + 1]]
            if x > 0:
                terms += [D * vals[x], -D * vals[x - 1]]
            worst = max(worst, abs(ctx.fsum(terms)))
            size = max(size, max(abs(t) for t in terms))
            top = max(top, abs(E * vals[x]))
        if top == 0:
            return 0.0 if worst == 0 else math.inf
        # bits cancelled inside the series and inside the residual itself
        needed = 53 + lost + float(ctx.log(size / top, 2)) + GUARD_BITS
        if prec >= needed or prec >= MAX_PREC:
            return float(worst / top)
        prec = min(MAX_PREC, max(int(needed) + GUARD_BITS, 2 * prec))


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------


def _check_site(inst: FamilyInstance, x: int) -> int:
    if int(x) != x or not 0 <= x <= inst.last_site:
        raise LatticeRangeError(f"site {x} outside lattice 0..{inst.last_site}")
    return int(x)


def _check_mode(inst: FamilyInstance, n: int, *, exposed: bool = False) -> int:
    if int(n) != n or n < 0:
        raise LatticeRangeError(f"mode {n} is not a nonnegative integer")
    if inst.finite and n > inst.lattice.N:
        raise LatticeRangeError(f"mode {n} outside 0..{inst.lattice.N}")
    if exposed and not inst.finite and n > inst.n_max:
        raise ModeCapExceeded(f"mode {n} above exposed cap n_max={inst.n_max}")
    return int(n)


def coeff_B(inst: FamilyInstance, x: int) -> float:
    return float(inst.data.B(inst.p, _check_site(inst, x)))


def coeff_D(inst: FamilyInstance, x: int) -> float:
    return float(inst.data.D(inst.p, _check_site(inst, x)))


def eta(inst: FamilyInstance, x: int) -> float:
    return float(inst.data.eta(inst.p, _check_site(inst, x)))


def energy(inst: FamilyInstance, n: int) -> float:
    return float(inst.data.energy(inst.p, _check_mode(inst, n)))


def poly(inst: FamilyInstance, n: int, x: int) -> float:
    """``P_n(eta(x))`` normalised so that ``P_n(0) = P_0(x) = 1``."""
    return _series_value(inst.data, inst.p, _check_mode(inst, n), _check_site(inst, x))


def log_poly(inst: FamilyInstance, n: int, x: int) -> SignedLog:
    """``P_n(eta(x))`` as a sign and log magnitude (no overflow for high n)."""
    return _series_log(inst.data, inst.p, _check_mode(inst, n), _check_site(inst, x))


def poly_any(inst: FamilyInstance, n: int, x: int) -> float:
    """Like :func:`poly` but without the lattice range check on ``x``.

    The series is a polynomial in ``eta(x)`` and can be evaluated one site
    beyond a truncated lattice, which the difference-equation check needs.
    """
    return _series_value(inst.data, inst.p, _check_mode(inst, n), int(x))


def log_weight(inst: FamilyInstance, x: int) -> SignedLog:
    return inst.data.log_weight(inst.p, _check_site(inst, x))


def weight(inst: FamilyInstance, x: int) -> float:
    return log_weight(inst, x).value()


def sqrt_weight(inst: FamilyInstance, x: int) -> float:
    return math.exp(0.5 * log_weight(inst, x).log)


def weight_product(inst: FamilyInstance, x: int) -> float:
    """The weight from the running product ``prod_{y<x} B(y)/D(y+1)``."""
    x = _check_site(inst, x)
    out = SignedLog()
    for y in range(x):
        out = out * inst.data.B(inst.p, y) / inst.data.D(inst.p, y + 1)
    return out.value()


def log_norm_sq(inst: FamilyInstance, n: int) -> SignedLog:
    return inst.data.log_norm(inst.p, _check_mode(inst, n))


def norm_sq(inst: FamilyInstance, n: int) -> float:
    return log_norm_sq(inst, n).value()


def leading_coeff(inst: FamilyInstance, n: int) -> float:
    return inst.data.leading(inst.p, _check_mode(inst, n)).value()


def energy_sup(inst: FamilyInstance) -> float:
    """Supremum of the full spectrum (``inf`` when unbounded)."""
    if inst.finite:
        return energy(inst, inst.lattice.N)
    sup = inst.data.energy_sup
    return float(sup(inst.p)) if sup else math.inf


def sites(inst: FamilyInstance) -> range:
    return range(inst.size)


def modes(inst: FamilyInstance) -> range:
    return range(inst.n_modes)
