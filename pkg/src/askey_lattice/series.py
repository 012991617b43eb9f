"""Terminating (basic) hypergeometric series and sign-tracked log products.

Series are summed with the term-ratio recurrence so that no Pochhammer symbol
is ever formed on its own. The arithmetic only uses ``+ - * / **`` which lets
the same code run on ``float`` and on ``mpmath.mpf``; the polynomial evaluator
re-runs a sum in extended precision when the double pass shows cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class Series:
    """A terminating series ``prefactor * rFs(upper; lower; z)`` or ``rphis``.

    ``q`` is ``None`` for ordinary hypergeometric series. ``terms`` is the
    number of terms kept (``k = 0 .. terms-1``); truncating there is exact
    because an upper parameter ``-n``/``q^{-n}`` (or ``-x``/``q^{-x}``) kills
    every later term.
    """

    upper: Sequence
    lower: Sequence
    z: object
    terms: int
    q: object = None
    prefactor: object = 1.0

    def evaluate(self):
        return self.evaluate_with_scale()[0]

    def evaluate_with_scale(self):
        """Return ``(value, largest |term|)``, both including the prefactor."""
        total, scale = self.raw_sum()
        return self.scaled(total), abs(self.scaled(scale))

    def raw_sum(self):
        """``(sum, largest |term|)`` of the series without the prefactor."""
        if self.q is None:
            return hyper_sum(self.upper, self.lower, self.z, self.terms)
        return qhyper_sum(self.upper, self.lower, self.z, self.q, self.terms)

    def scaled_log(self, x) -> "SignedLog":
        """Prefactor times ``x`` as a :class:`SignedLog` (never overflows)."""
        if x == 0:
            return SignedLog(0, -math.inf)
        sign = 1 if x > 0 else -1
        out = SignedLog(sign, float(_log_abs(x)))
        pre = self.prefactor
        return out * (pre if isinstance(pre, SignedLog) else SignedLog.of(float(pre)))

    def scaled(self, x):
        """Multiply ``x`` by the prefactor."""
        pre = self.prefactor
        if isinstance(pre, SignedLog):
            return pre.times(x)
        return pre * x


def hyper_sum(upper, lower, z, terms: int):
    """Sum ``sum_{k<terms} prod (a)_k / prod (b)_k z^k / k!``.

    Returns the sum and the largest term magnitude (a cancellation gauge).
    """
    total = term = 1.0 + 0 * z
    scale = abs(term)
    for k in range(terms - 1):
        num = 1.0
        for a in upper:
            num = num * (a + k)
        den = 1.0
        for b in lower:
            den = den * (b + k)
        term = term * num / den * z / (k + 1)
        total = total + term
        scale = max(scale, abs(term))
    return total, scale


def qhyper_sum(upper, lower, z, q, terms: int):
    """Basic hypergeometric sum with the Gasper-Rahman balancing factor.

    term_k = prod (a;q)_k / prod (b;q)_k * z^k / (q;q)_k
             * [(-1)^k q^{k(k-1)/2}]^{1+s-r}
    """
    excess = 1 + len(lower) - len(upper)
    total = term = 1.0 + 0 * z
    scale = abs(term)
    qk = 1.0 + 0 * q
    for k in range(terms - 1):
        num = 1.0
        for a in upper:
            num = num * (1 - a * qk)
        den = 1.0
        for b in lower:
            den = den * (1 - b * qk)
        ratio = num / den * z / (1 - qk * q)
        if excess:
            ratio = ratio * (-qk) ** excess
        term = term * ratio
        total = total + term
        scale = max(scale, abs(term))
        qk = qk * q
    return total, scale


def _log_abs(x) -> float:
    if isinstance(x, float):
        return math.log(abs(x))
    return float(x.context.log(abs(x)))


class SignedLog:
    """A real number stored as ``sign * exp(log)``.

    Used for closed-form weights and norms whose Pochhammer pieces overflow
    long before the final value does.
    """

    __slots__ = ("sign", "log")

    def __init__(self, sign: int = 1, log: float = 0.0):
        self.sign = sign
        self.log = log

    @classmethod
    def of(cls, value: float) -> "SignedLog":
        if value == 0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    def __mul__(self, other) -> "SignedLog":
        if not isinstance(other, SignedLog):
            other = SignedLog.of(other)
        return SignedLog(self.sign * other.sign, self.log + other.log)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SignedLog":
        if not isinstance(other, SignedLog):
            other = SignedLog.of(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a vanishing factor")
        return SignedLog(self.sign * other.sign, self.log - other.log)

    def __rtruediv__(self, other) -> "SignedLog":
        return SignedLog.of(other) / self

    def __pow__(self, k: int) -> "SignedLog":
        return SignedLog(self.sign**k, self.log * k)

    def times(self, x):
        """``self * x`` without forming ``exp(self.log)`` on its own.

        Works for float and mpmath ``x``; the prefactor may lie far outside
        the double range while the product does not.
        """
        if self.sign == 0 or x == 0:
            return 0.0 * x
        if isinstance(x, float):
            return self.sign * math.copysign(math.exp(self.log + math.log(abs(x))), x)
        return self.sign * x * x.context.exp(self.log)

    def value(self) -> float:
        return self.sign * math.exp(self.log) if self.sign else 0.0

    def __repr__(self) -> str:
        return f"SignedLog({self.sign:+d}, {self.log!r})"


def power(base: float, exponent: float) -> SignedLog:
    """``base**exponent`` for positive base, kept in the log domain."""
    return SignedLog(1, exponent * math.log(base))


def poch(a: float, n: int) -> SignedLog:
    """Rising factorial ``(a)_n`` as a sign-tracked log."""
    out = SignedLog()
    for j in range(n):
        out = out * (a + j)
    return out


def qpoch(a: float, q: float, n: int) -> SignedLog:
    """``(a; q)_n = prod_{j<n} (1 - a q^j)``."""
    out = SignedLog()
    for j in range(n):
        out = out * (1.0 - a * q**j)
    return out


def qpoch_inf(a: float, q: float) -> SignedLog:
    """``(a; q)_inf``, truncated once ``|a q^j|`` is below double resolution."""
    out = SignedLog()
    aq = a
    while abs(aq) > 1e-18:
        out = out * (1.0 - aq)
        aq *= q
    return out


def factorial(n: int) -> SignedLog:
    return SignedLog(1, math.lgamma(n + 1))


def binom(n: int, k: int) -> SignedLog:
    return SignedLog(1, math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def qbinom(n: int, k: int, q: float) -> SignedLog:
    return qpoch(q, q, n) / (qpoch(q, q, k) * qpoch(q, q, n - k))


def multi_poch(args: Sequence[float], n: int) -> SignedLog:
    out = SignedLog()
    for a in args:
        out = out * poch(a, n)
    return out


def multi_qpoch(args: Sequence[float], q: float, n: int) -> SignedLog:
    out = SignedLog()
    for a in args:
        out = out * qpoch(a, q, n)
    return out
