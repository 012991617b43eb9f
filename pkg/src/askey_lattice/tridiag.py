"""Symmetric tridiagonal eigensolver used as the independent numerical oracle.

Implicit-shift QL with Wilkinson shifts and eigenvector accumulation. The
split test is the relative one (``e_i^2 <= eps^2 |d_i d_{i+1}|``) and a block
whose diagonal is graded with the large end on top is reversed before the
sweep, which keeps small eigenvalues of strongly graded matrices (the
q-families) accurate relative to their own size rather than to the norm.

Dense symmetric matrices are reduced to tridiagonal form by Householder
reflections first (:func:`dense_eigh`).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceFailure

EPS = np.finfo(float).eps
SAFMIN = np.finfo(float).tiny
MAX_SWEEPS_PER_EIGENVALUE = 30


def _split_points(d: np.ndarray, e: np.ndarray) -> list[int]:
    """Indices i where ``e[i]`` is negligible; zeroes them in place."""
    cuts = []
    for i in range(len(e)):
        if e[i] * e[i] <= (EPS * EPS * abs(d[i])) * abs(d[i + 1]) + SAFMIN:
            e[i] = 0.0
            cuts.append(i)
    return cuts


def _ql_block(d: np.ndarray, e: np.ndarray, z: np.ndarray | None, max_iter: int) -> int:
    """Diagonalise an unreduced-or-not tridiagonal block in place.

    ``d`` has length n, ``e`` length n (last entry is workspace). Rotations
    are applied to the columns of ``z`` when given. Returns iterations used.
    """
    n = len(d)
    total = 0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                if e[m] * e[m] <= (EPS * EPS * abs(d[m])) * abs(d[m + 1]) + SAFMIN:
                    break
                m += 1
            if m == l:
                break
            if it >= MAX_SWEEPS_PER_EIGENVALUE or total >= max_iter:
                raise ConvergenceFailure(
                    f"QL iteration did not converge (eigenvalue {l}, {it} sweeps)"
                )
            it += 1
            total += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi = z[:, i].copy()
                    z[:, i] = c * zi - s * z[:, i + 1]
                    z[:, i + 1] = s * zi + c * z[:, i + 1]
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return total


def tridiag_eigh(
    diag, offdiag, *, vectors: bool = True, normalize_signs: bool = True
) -> tuple[np.ndarray, np.ndarray | None]:
    """Eigen-decompose the symmetric tridiagonal matrix ``(diag, offdiag)``.

    Returns ascending eigenvalues and, if requested, the matrix whose columns
    are the orthonormal eigenvectors. With ``normalize_signs`` each vector's
    first component larger than ``sqrt(eps)`` times its max-norm is made
    positive.

    Raises
    ------
    ConvergenceFailure
        When the iteration cap is hit.
    """
    d = np.array(diag, dtype=float)
    off = np.array(offdiag, dtype=float)
    n = len(d)
    if len(off) != max(n - 1, 0):
        raise ValueError("offdiag must have length len(diag)-1")
    z = np.eye(n) if vectors else None
    if n == 0:
        return d, z
    e = np.append(off, 0.0)
    bounds = [0] + [i + 1 for i in _split_points(d, e[:-1])] + [n]
    max_iter = MAX_SWEEPS_PER_EIGENVALUE * n
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo < 2:
            continue
        db = d[lo:hi].copy()
        eb = e[lo:hi].copy()
        eb[-1] = 0.0
        flip = abs(db[-1]) < abs(db[0])
        if flip:
            db = db[::-1].copy()
            eb = np.append(eb[:-1][::-1], 0.0)
        zb = np.eye(hi - lo) if vectors else None
        _ql_block(db, eb, zb, max_iter)
        if flip and vectors:
            zb = zb[::-1, :]
        d[lo:hi] = db
        if vectors:
            z[lo:hi, lo:hi] = zb
    order = np.argsort(d, kind="stable")
    d = d[order]
    if not vectors:
        return d, None
    z = z[:, order]
    if normalize_signs:
        z = _fix_signs(z)
    return d, z


def _fix_signs(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    for j in range(z.shape[1]):
        col = z[:, j]
        big = np.abs(col) > math.sqrt(EPS) * np.abs(col).max()
        first = int(np.argmax(big))
        if col[first] < 0:
            z[:, j] = -col
    return z


def householder_tridiagonalize(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce a dense symmetric matrix: ``a = Q T Q^T``.

    Returns ``(diag, offdiag, Q)``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0 or np.all(x[1:] == 0):
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        # a <- H a H with H = I - 2 v v^T acting on rows/cols k+1..
        sub = a[k + 1 :, :]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = a[:, k + 1 :]
        sub -= 2.0 * np.outer(sub @ v, v)
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v)
    return np.diag(a).copy(), np.diag(a, -1).copy(), q


def dense_eigh(a, *, vectors: bool = True) -> tuple[np.ndarray, np.ndarray | None]:
    """Symmetric dense eigensolver: Householder reduction then tridiagonal QL."""
    d, e, q = householder_tridiagonalize(a)
    w, z = tridiag_eigh(d, e, vectors=vectors, normalize_signs=False)
    if not vectors:
        return w, None
    return w, _fix_signs(q @ z)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: ``n-1`` rounds of disjoint column pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        left, right = [], []
        for k in range(m // 2):
            i, j = players[k], players[m - 1 - k]
            if i < n and j < n:
                left.append(min(i, j))
                right.append(max(i, j))
        rounds.append((np.array(left, dtype=int), np.array(right, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _one_sided_jacobi(g: np.ndarray, max_sweeps: int = 80) -> np.ndarray:
    """Orthogonalise the columns of ``g`` by plane rotations (Hestenes).

    Returns the rotated copy; its column norms are the singular values of
    ``g`` and its normalised columns the left singular vectors.
    """
    g = np.array(g, dtype=float, copy=True)
    n = g.shape[1]
    if n < 2:
        return g
    tol = max(n, 10) * EPS
    schedule = _round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        for left, right in schedule:
            ui, uj = g[:, left], g[:, right]
            alpha = np.einsum("ij,ij->j", ui, ui)
            beta = np.einsum("ij,ij->j", uj, uj)
            gamma = np.einsum("ij,ij->j", ui, uj)
            active = np.abs(gamma) > tol * np.sqrt(alpha) * np.sqrt(beta)
            if not active.any():
                continue
            rotated = True
            gam = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * gam)
            t = np.sign(zeta) / (np.abs(zeta) + np.hypot(1.0, zeta))
            t = np.where(zeta == 0, 1.0, t)
            c = 1.0 / np.hypot(1.0, t)
            s = np.where(active, c * t, 0.0)
            c = np.where(active, c, 1.0)
            g[:, left] = c * ui - s * uj
            g[:, right] = s * ui + c * uj
        if not rotated:
            return g
    raise ConvergenceFailure(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")


def factored_eigh(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose ``H = A^T A`` for the upper bidiagonal factor ``A``.

    ``A`` has diagonal ``a`` (length n, nonnegative) and superdiagonal
    ``-b`` (length n-1, positive ``b``). The eigenvalues are the squared
    singular values of ``A``; one-sided Jacobi on the rows of ``A``
    determines them to high relative accuracy, so tiny eigenvalues of
    strongly graded Hamiltonians are resolved well below ``eps * ||H||``.
    A vanishing last diagonal entry of ``A`` (a closed lattice end) gives an
    exact zero eigenvalue whose vector is the null vector of ``A``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    if len(b) != max(n - 1, 0):
        raise ValueError("superdiagonal must have length n-1")
    rows = n - 1 if n and a[-1] == 0.0 else n
    full = np.zeros((n, n))
    full[np.arange(n), np.arange(n)] = a
    full[np.arange(n - 1), np.arange(1, n)] = -b
    g = _one_sided_jacobi(full[:rows].T)
    norms = np.linalg.norm(g, axis=0)
    vals = list(norms**2)
    vecs = [g[:, k] / norms[k] if norms[k] > 0 else g[:, k] for k in range(rows)]
    if rows < n:
        # null vector of the (n-1) x n bidiagonal: phi_{x+1} = a_x / b_x * phi_x
        with np.errstate(divide="ignore"):
            logs = np.concatenate(([0.0], np.cumsum(np.log(a[:-1]) - np.log(b))))
        null = np.exp(logs - logs.max())
        vals.append(0.0)
        vecs.append(null / np.linalg.norm(null))
    vals = np.array(vals)
    order = np.argsort(vals, kind="stable")
    return vals[order], _fix_signs(np.column_stack(vecs)[:, order])
