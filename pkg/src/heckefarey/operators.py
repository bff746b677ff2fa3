"""Perron-Frobenius and transfer operators of F_q, pointwise iteration by
word sums, an Ulam discretisation and the eigenfunction check for h(x) = 1/x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from . import _parallel
from .algring import RingContext, chebyshev_s, to_float
from .heckegroup import DEFAULT_CAP, alphabet, alphabet_float, check_cap, word_matrix_chunks


@dataclass(frozen=True)
class DensityFn:
    """A real function on (0, 1]. ``vectorized`` functions accept numpy arrays."""

    fn: Callable
    label: str = "f"
    vectorized: bool = False

    def __call__(self, x):
        if self.vectorized or np.isscalar(x):
            return self.fn(x)
        return np.vectorize(self.fn, otypes=[float])(x)

    def times(self, other: "DensityFn", label: str | None = None) -> "DensityFn":
        return DensityFn(lambda x: self(x) * other(x), label or f"{self.label}*{other.label}",
                         self.vectorized and other.vectorized)


ONE = DensityFn(lambda x: np.ones_like(x, dtype=float) if not np.isscalar(x) else 1.0,
                "one", vectorized=True)
INV_X = DensityFn(lambda x: 1.0 / x, "invx", vectorized=True)
ZERO = DensityFn(lambda x: np.zeros_like(x, dtype=float) if not np.isscalar(x) else 0.0,
                 "zero", vectorized=True)


def indicator(a: float, b: float, label: str | None = None) -> DensityFn:
    return DensityFn(lambda x: ((x >= a) & (x <= b)).astype(float) if not np.isscalar(x)
                     else float(a <= x <= b), label or f"1[{a},{b}]", vectorized=True)


def _check_x(x: float) -> None:
    if not (0.0 < x <= 1.0):
        raise ValueError(f"x = {x} must lie in (0, 1]")


def pf_apply(ctx: RingContext, f, x: float) -> float:
    """(P f)(x) = sum over the alphabet p of |p'(x)| f(p.x)."""
    _check_x(x)
    terms = []
    for a, b, c, d in alphabet_float(ctx):
        den = c * x + d
        terms.append(float(f((a * x + b) / den)) / (den * den))
    return math.fsum(terms)


def pf_iterate_recursive(ctx: RingContext, f, x: float, n: int, cap: int = DEFAULT_CAP) -> float:
    """P^n f(x) by n-fold recursion of pf_apply (cross-check path)."""
    _check_x(x)
    check_cap(ctx.q, n, cap)
    letters = alphabet_float(ctx)

    def rec(y, k):
        if k == 0:
            return float(f(y))
        terms = []
        for a, b, c, d in letters:
            den = c * y + d
            terms.append(rec((a * y + b) / den, k - 1) / (den * den))
        return math.fsum(terms)

    return rec(float(x), n)


def word_sum(ctx: RingContext, n: int, term, cap: int = DEFAULT_CAP) -> float:
    """fsum over W_n of term(M) where M is a (K, 4) chunk of float word matrices.

    Chunk partial sums are merged in chunk order, so the result does not
    depend on the worker count.
    """
    chunks = list(word_matrix_chunks(ctx, n, cap=cap))
    partials = _parallel.ordered_map(lambda jm: math.fsum(term(jm[1])), chunks)
    return math.fsum(partials)


def pf_iterate_pointwise(ctx: RingContext, f, x: float, n: int, cap: int = DEFAULT_CAP) -> float:
    """P^n f(x) = sum_{h in W_n} |h'(x)| f(h.x), streamed over words."""
    _check_x(x)
    if not isinstance(f, DensityFn):
        f = DensityFn(f)

    def term(M):
        a, b, c, d = M.T
        den = c * x + d
        return np.asarray(f((a * x + b) / den), dtype=float) / (den * den)

    return word_sum(ctx, n, term, cap)


def transfer_apply(ctx: RingContext, f, x: float) -> float:
    """F^(f)(x) = P(f h)(x) / h(x) with h(x) = 1/x."""
    _check_x(x)
    return x * pf_apply(ctx, lambda y: f(y) / y, x)


def transfer_iterate(ctx: RingContext, f, x: float, n: int, cap: int = DEFAULT_CAP) -> float:
    """F^^n(f)(x) = P^n(f h)(x) / h(x)."""
    fv = f if isinstance(f, DensityFn) else DensityFn(f)
    return x * pf_iterate_pointwise(ctx, DensityFn(lambda y: fv(y) / y, vectorized=fv.vectorized),
                                    x, n, cap)


def pf_power_one_grid(ctx: RingContext, n: int, xs, cap: int = DEFAULT_CAP) -> np.ndarray:
    """P^n 1 on a grid: sum_{h in W_n} (c_h x + d_h)^{-2}, vectorised over x."""
    xs = np.asarray(xs, dtype=float)
    total = np.zeros_like(xs)
    comp = np.zeros_like(xs)
    for _, M in word_matrix_chunks(ctx, n, cap=cap):
        c, d = M[:, 2], M[:, 3]
        step = max(1, 2_000_000 // max(xs.size, 1))
        for s in range(0, len(c), step):
            den = np.outer(c[s:s + step], xs) + d[s:s + step, None]
            part = np.sum(1.0 / (den * den), axis=0)
            # Kahan-compensated accumulation across blocks
            y = part - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


def quadrature(fn, a: float, b: float, panels: int) -> float:
    """Composite midpoint rule on [a, b]; ``fn`` takes a numpy array."""
    h = (b - a) / panels
    xs = a + h * (np.arange(panels) + 0.5)
    return math.fsum(np.asarray(fn(xs), dtype=float)) * h


def quadrature_gauss(fn, a: float, b: float, panels: int = 8, order: int = 24) -> float:
    """Composite Gauss-Legendre rule on [a, b]; ``fn`` takes a numpy array."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = np.asarray(fn(xs), dtype=float).reshape(panels, order)
    return math.fsum((vals * weights[None, :] * half[:, None]).ravel())


# -- Ulam discretisation ---------------------------------------------------------

@dataclass(frozen=True)
class UlamMatrix:
    bins: int
    matrix: sparse.csr_matrix

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bins + 1)

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


def ulam_build(ctx: RingContext, bins: int) -> UlamMatrix:
    """Entry (i, j) = Leb(F^{-1}(bin_i) n bin_j) / Leb(bin_j) on a uniform grid."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    B = bins
    edges = np.linspace(0.0, 1.0, B + 1)
    rows, cols, vals = [], [], []
    for a, b, c, d in alphabet_float(ctx):
        u = (a * edges + b) / (c * edges + d)
        lo = np.minimum(u[:-1], u[1:])
        hi = np.maximum(u[:-1], u[1:])
        for i in range(B):
            left, right = lo[i], hi[i]
            j0 = min(int(left * B), B - 1)
            j1 = min(int(right * B), B - 1)
            for j in range(j0, j1 + 1):
                seg = min(right, edges[j + 1]) - max(left, edges[j])
                if seg > 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(seg * B)
    M = sparse.coo_matrix((vals, (rows, cols)), shape=(B, B)).tocsr()
    return UlamMatrix(B, M)


def ulam_iterate(M: UlamMatrix, density, n: int) -> np.ndarray:
    v = np.asarray(density, dtype=float).copy()
    if v.shape != (M.bins,):
        raise ValueError(f"density must have {M.bins} entries")
    for _ in range(n):
        v = M.matrix @ v
    return v


# -- eigenfunction checks -------------------------------------------------------

def eigenfunction_residual(ctx: RingContext, grid_size: int) -> float:
    """max over x = k/grid_size, k = 1..grid_size, of |P h - h| / h."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    worst = 0.0
    for k in range(1, grid_size + 1):
        x = k / grid_size
        ph = pf_apply(ctx, INV_X, x)
        worst = max(worst, abs(ph - 1.0 / x) * x)
    return worst


def telescoping_residual(ctx: RingContext, x: float) -> float:
    """|sum_{k=1}^{q-1} [log(x s(k) + s(k+1)) - log(x s(k-1) + s(k))] - log x|."""
    s = [to_float(chebyshev_s(ctx, k)) for k in range(ctx.q + 1)]
    total = math.fsum(math.log(x * s[k] + s[k + 1]) - math.log(x * s[k - 1] + s[k])
                      for k in range(1, ctx.q))
    return abs(total - math.log(x))


def positivity_check(ctx: RingContext, f, xs) -> bool:
    return all(pf_apply(ctx, f, x) >= 0.0 for x in xs)

