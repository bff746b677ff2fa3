"""Measures and the equidistribution harness: mu, Lebesgue volumes of
F^{-n}-preimages (word sums and Monte Carlo), weighted Dirac combs, cusp
combs over reduced fractions, tail probabilities and ratio mixing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algring import RingContext, RingElem, to_float
from .fareymap import float_map, return_times_array
from .heckegroup import (
    DEFAULT_CAP,
    alphabet,
    alphabet_float,
    check_cap,
    indifferent_letter,
    word_compose,
    word_matrix_chunks,
    words_iter,
)
from .operators import word_sum

MC_BLOCK = 1 << 16


# -- mu ---------------------------------------------------------------------

def mu_interval(ctx: RingContext | None, a, b) -> float:
    """mu((a, b]) = log(b/a) for the invariant measure d mu = dx/x.

    Endpoints may be floats or ProjPoints.
    """
    a, b = float(a), float(b)
    if a <= 0.0:
        raise ValueError("mu is infinite on intervals reaching 0")
    if b < a or b > 1.0:
        raise ValueError(f"need 0 < a <= b <= 1, got ({a}, {b})")
    return math.log(b / a)


# -- preimage volumes -----------------------------------------------------------

def _check_ab(alpha: float, beta: float) -> None:
    if not (0.0 < alpha <= beta <= 1.0):
        raise ValueError(f"need 0 < alpha <= beta <= 1, got ({alpha}, {beta})")


def preimage_lebesgue_words(ctx: RingContext, n: int, alpha: float, beta: float,
                            cap: int = DEFAULT_CAP) -> float:
    """Leb(F^{-n}[alpha, beta]) = sum_{h in W_n} |h.beta - h.alpha|."""
    if alpha == 0.0 and beta == 1.0:
        return 1.0
    _check_ab(alpha, beta)

    def term(M):
        a, b, c, d = M.T
        return np.abs((a * beta + b) / (c * beta + d) - (a * alpha + b) / (c * alpha + d))

    return word_sum(ctx, n, term, cap)


def uniform_block(seed: int, block: int, size: int = MC_BLOCK) -> np.ndarray:
    """Uniforms on [0, 1) from a Philox generator keyed by (seed, block)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(size)


def uniform_samples(seed: int, samples: int) -> np.ndarray:
    blocks = -(-samples // MC_BLOCK)
    return np.concatenate([uniform_block(seed, i) for i in range(blocks)])[:samples]


def preimage_lebesgue_montecarlo(ctx: RingContext, n: int, alpha: float, beta: float,
                                 samples: int, seed: int = 0) -> tuple[float, float]:
    """(proportion of uniform x with F^n(x) in [alpha, beta], binomial stderr)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not (0.0 <= alpha <= beta <= 1.0):
        raise ValueError(f"need 0 <= alpha <= beta <= 1, got ({alpha}, {beta})")
    fm = float_map(ctx)
    hits = 0
    for start in range(0, samples, MC_BLOCK):
        x = uniform_block(seed, start // MC_BLOCK)[: min(MC_BLOCK, samples - start)]
        for _ in range(n):
            x = fm.apply(x)
        hits += int(np.count_nonzero((x >= alpha) & (x <= beta)))
    p = hits / samples
    return p, math.sqrt(p * (1.0 - p) / samples)


def montecarlo_levels(ctx: RingContext, n_max: int, intervals, samples: int, seed: int = 0):
    """Proportions for every n in 0..n_max and interval at once (shared orbits).

    Returns an array of shape (n_max + 1, len(intervals)).
    """
    fm = float_map(ctx)
    counts = np.zeros((n_max + 1, len(intervals)), dtype=np.int64)
    for start in range(0, samples, MC_BLOCK):
        x = uniform_block(seed, start // MC_BLOCK)[: min(MC_BLOCK, samples - start)]
        for n in range(n_max + 1):
            if n:
                x = fm.apply(x)
            for k, (a, b) in enumerate(intervals):
                counts[n, k] += np.count_nonzero((x >= a) & (x <= b))
    return counts / samples


# -- weighted Dirac combs -----------------------------------------------------------

@dataclass
class WeightedComb:
    locations: np.ndarray
    weights: np.ndarray
    q: int
    n: int
    base: float
    meta: dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def cdf(self, y: float) -> float:
        return math.fsum(self.weights[self.locations <= y])

    def __len__(self):
        return len(self.weights)


def dirac_comb(ctx: RingContext, x: float, n: int, with_log_factor: bool = True,
               cap: int = DEFAULT_CAP) -> WeightedComb:
    """Atoms (h.x, x |h'(x)| [log n]) for h in W_n."""
    if not (0.0 < x <= 1.0):
        raise ValueError("x must lie in (0, 1]; the comb does not extend to 0")
    if with_log_factor and n < 2:
        raise ValueError("the log(n) factor needs n >= 2")
    locs, wts = [], []
    for _, M in word_matrix_chunks(ctx, n, cap=cap):
        a, b, c, d = M.T
        den = c * x + d
        locs.append((a * x + b) / den)
        wts.append(x / (den * den))
    w = np.concatenate(wts)
    if with_log_factor:
        w = w * math.log(n)
    return WeightedComb(np.concatenate(locs), w, ctx.q, n, x, {"log_factor": with_log_factor})


def comb_cdf(comb: WeightedComb, y: float) -> float:
    return comb.cdf(y)


# -- reduced fractions and cusp combs -------------------------------------------

class ReducedFraction:
    """A pair (r, s) over Z[lambda] up to a global sign."""

    __slots__ = ("r", "s")

    def __init__(self, r: RingElem, s: RingElem):
        sg = s.sign() or r.sign()
        if sg == 0:
            raise ValueError("(0, 0) is not a reduced fraction")
        if sg < 0:
            r, s = -r, -s
        self.r, self.s = r, s

    @classmethod
    def from_word(cls, ctx: RingContext, word) -> "ReducedFraction":
        """h.(1, 1) for h = word_compose(word); reduced by construction."""
        return reduced_from_word(ctx, word, cls(ctx.one, ctx.one))

    def __eq__(self, other):
        if not isinstance(other, ReducedFraction):
            return NotImplemented
        return self.r == other.r and self.s == other.s

    def __hash__(self):
        return hash((self.r.coeffs, self.s.coeffs))

    def value(self) -> float:
        return float(to_float(self.r, 80) / to_float(self.s, 80))

    def is_one(self) -> bool:
        return self.r == self.s

    def __repr__(self):
        return f"ReducedFraction({self.r.coeffs}, {self.s.coeffs} ~ {self.value():.12g})"


def reduced_from_word(ctx: RingContext, word, base: ReducedFraction) -> ReducedFraction:
    """(a v + b w, c v + d w) for word_compose(word) = [[a, b], [c, d]]."""
    g = word_compose(ctx, word)
    v, w = base.r, base.s
    return ReducedFraction(g.a * v + g.b * w, g.c * v + g.d * w)


@dataclass
class CuspComb:
    comb: WeightedComb
    fractions: list          # distinct reduced fractions, first-seen order
    multiplicity: dict       # fraction -> number of producing words
    words: int               # |W_n|

    @property
    def count(self) -> int:
        return len(self.fractions)


def cusp_comb(ctx: RingContext, base: ReducedFraction, n: int, with_log_factor: bool = True,
              cap: int = DEFAULT_CAP) -> CuspComb:
    """Atoms (r/s, c_{v/w} v w [log n] / s^2) over RF_n(v, w).

    c_{v/w} = 2 at v/w = 1 and 1 otherwise.
    """
    val = base.value()
    if not (0.0 < val <= 1.0):
        raise ValueError("base must represent a point of (0, 1]")
    if with_log_factor and n < 2:
        raise ValueError("the log(n) factor needs n >= 2")
    check_cap(ctx.q, n, cap)
    letters = alphabet(ctx)
    v, w = base.r, base.s
    # level-by-level images of the pair (v, w): same words, same order as words_iter
    pairs = [(v, w)]
    for _ in range(n):
        pairs = [(p.a * r + p.b * s, p.c * r + p.d * s) for r, s in pairs for p in letters]
        pairs = _reorder_prefix(pairs, len(letters))
    mult: dict = {}
    for r, s in pairs:
        rf = ReducedFraction(r, s)
        mult[rf] = mult.get(rf, 0) + 1
    fractions = list(mult)
    c_val = 2.0 if base.is_one() else 1.0
    vw = to_float(v * w)
    factor = c_val * vw * (math.log(n) if with_log_factor else 1.0)
    locs = np.array([f.value() for f in fractions])
    wts = np.array([factor / to_float(f.s * f.s) for f in fractions])
    comb = WeightedComb(locs, wts, ctx.q, n, val, {"log_factor": with_log_factor, "c": c_val})
    return CuspComb(comb, fractions, mult, len(pairs))


def _reorder_prefix(pairs, k):
    # pairs were built as (old word i) -> letter p applied on the LEFT; reorder
    # so that index = letter * K + i (the new letter is the first letter)
    K = len(pairs) // k
    return [pairs[i * k + j] for j in range(k) for i in range(K)]


def cusp_weight_identity(ctx: RingContext, base: ReducedFraction, n: int) -> float:
    """max over words h of |1/s^2 - |h'(v/w)| / w^2| for (r, s) = h.(v, w)."""
    x = base.value()
    w2 = to_float(base.s * base.s)
    worst = 0.0
    for word in words_iter(ctx, n):
        rf = reduced_from_word(ctx, word, base)
        g = word_compose(ctx, word)
        _, _, c, d = g.float_entries()
        hprime = 1.0 / (c * x + d) ** 2
        worst = max(worst, abs(1.0 / to_float(rf.s * rf.s) - hprime / w2))
    return worst


def x_equals_one_mass(ctx: RingContext) -> float:
    """sum_{p in alphabet} |p'(1)| / p.1 (equals P h(1) = 1)."""
    terms = []
    for a, b, c, d in alphabet_float(ctx):
        den = c + d
        terms.append((1.0 / (den * den)) / ((a + b) / den))
    return math.fsum(terms)


# -- the distribution-function error chain -------------------------------------

def mu_neighbourhood(x: float, eps: float) -> float:
    return math.log((x + eps / 2) / (x - eps / 2))


def chain_constant_C(x: float, grid: int = 2000) -> float:
    """C with eps/mu(V_eps) + x <= (C + 1) x for all admissible eps.

    Taken as the sup of eps / (x mu(V_eps)) over an eps-grid of
    (0, min(2x, 2 - 2x)), joined with its eps -> 0 limit (= 1).
    """
    top = min(2 * x, 2 - 2 * x)
    eps = top * (np.arange(1, grid) / grid)
    vals = eps / (x * np.log((x + eps / 2) / (x - eps / 2)))
    return float(max(vals.max(), 1.0))


@dataclass
class ChainRow:
    n: int
    y: float
    gap: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound


def error_chain(ctx: RingContext, x: float, eps: float, n: int, ys) -> list[ChainRow]:
    """|Delta^Leb_{eps,n}(y) - Delta^rho_n(y)| against its bound, for each y."""
    if not (0 < x - eps / 2 and x + eps / 2 < 1):
        raise ValueError("V_eps(x) must lie inside (0, 1)")
    lam = ctx.lambda_float
    mu_v = mu_neighbourhood(x, eps)
    logn = math.log(n)
    C = chain_constant_C(x)
    M_eps = (C + 1) / (lam * lam * (x - eps / 2) ** 2)
    lo_pts, hi_pts, atoms, wts = [], [], [], []
    for _, M in word_matrix_chunks(ctx, n):
        a, b, c, d = M.T
        u = (a * (x - eps / 2) + b) / (c * (x - eps / 2) + d)
        v = (a * (x + eps / 2) + b) / (c * (x + eps / 2) + d)
        lo_pts.append(np.minimum(u, v))
        hi_pts.append(np.maximum(u, v))
        den = c * x + d
        atoms.append((a * x + b) / den)
        wts.append(x / (den * den))
    lo, hi = np.concatenate(lo_pts), np.concatenate(hi_pts)
    atoms, wts = np.concatenate(atoms), np.concatenate(wts)
    leb_total = logn / mu_v * math.fsum(hi - lo)
    bound = ((abs(eps / mu_v - x) + eps / x) * mu_v / eps * leb_total
             + logn / n ** 2 * M_eps)
    rows = []
    for y in ys:
        d_leb = logn / mu_v * math.fsum(np.clip(np.minimum(hi, y) - lo, 0.0, None))
        d_rho = logn * math.fsum(wts[atoms <= y])
        rows.append(ChainRow(n, float(y), abs(d_leb - d_rho), bound))
    return rows


# -- tails --------------------------------------------------------------------

def tail_exact(ctx: RingContext, N: int, n: int) -> float:
    """mu(phi_Y > n) = log(1 + lambda / ((N + n) lambda + 1)) for Y = Y(N)."""
    if N < 0 or n < 1:
        raise ValueError("need N >= 0 and n >= 1")
    lam = ctx.lambda_float
    return math.log1p(lam / ((N + n) * lam + 1.0))


def tail_bounds(ctx: RingContext, N: int, n: int) -> tuple[float, float]:
    lam = ctx.lambda_float
    return lam / ((N + n + 1) * lam + 1), lam / ((N + n) * lam + 1)


def tail_summation(ctx: RingContext, N: int, n: int) -> float:
    """w(n) = sum_{j=1}^n mu(phi_Y > j)."""
    lam = ctx.lambda_float
    j = np.arange(1, n + 1, dtype=float)
    return math.fsum(np.log1p(lam / ((N + j) * lam + 1.0)))


def tail_bruteforce(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> float:
    """mu(phi_A > n) from depth-(n+1) cylinders.

    A cylinder h.(0, 1), h = p_1 ... p_{n+1}, lies in {phi_A > n} iff it lies
    in A and its images F^j(cylinder) = (p_{j+1} ... p_{n+1}).(0, 1) avoid A
    for j = 1..n. Membership is decided from the float cylinder endpoints.
    """
    check_cap(ctx.q, n + 1, cap)
    a_left = 1.0 / (ctx.lambda_float + 1.0)
    mats = alphabet_float(ctx)
    k = len(mats)
    # left/right endpoints of the level-m cylinders for every suffix length m
    total = []

    def cyl(word):
        A = np.array([1.0, 0.0, 0.0, 1.0])
        for i in word:
            a, b, c, d = A
            la, lb, lc, ld = mats[i]
            A = np.array([a * la + b * lc, a * lb + b * ld, c * la + d * lc, c * lb + d * ld])
        a, b, c, d = A
        e0, e1 = b / d, (a + b) / (c + d)
        return min(e0, e1), max(e0, e1)

    def inside_a(lo, hi):
        if lo >= a_left - 1e-15:
            return True
        if hi <= a_left + 1e-15:
            return False
        raise AssertionError("cylinder straddles the boundary of A")

    memo = {}
    for word in words_iter(ctx, n + 1, cap=cap):
        ok = True
        for j in range(n + 1):
            suffix = word[j:]
            if suffix not in memo:
                memo[suffix] = inside_a(*cyl(suffix))
            want = j == 0
            if memo[suffix] != want:
                ok = False
                break
        if ok:
            lo, hi = cyl(word)
            total.append(math.log(hi / lo))
    del k
    return math.fsum(total)


@dataclass
class TailReport:
    q: int
    N: int
    y_left: float
    samples: int
    seed: int
    rows: list      # dicts: n, exact, mc, stderr, survivors
    censored: int

    def header(self) -> list[str]:
        return ["n", "exact", "mc_estimate", "stderr", "samples", "censored"]


def sample_mu_on_y(y_left: float, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of mu|_Y / mu(Y) on Y = (a, 1]: x = a^(1 - u)."""
    return np.exp((1.0 - u) * math.log(y_left))


def tail_montecarlo(ctx: RingContext, N: int, n_max: int, samples: int, seed: int = 0) -> TailReport:
    """Empirical mu(Y) P(phi_Y > n) for n = 1..n_max with x ~ mu|_Y normalised."""
    lam = ctx.lambda_float
    a = 1.0 / ((N + 1) * lam + 1.0)
    mu_y = -math.log(a)
    times = []
    for start in range(0, samples, MC_BLOCK):
        u = uniform_block(seed, start // MC_BLOCK)[: min(MC_BLOCK, samples - start)]
        x = sample_mu_on_y(a, u)
        times.append(return_times_array(ctx, x, a, n_max))
    t = np.concatenate(times)
    censored = int(np.count_nonzero(t > n_max))
    rows = []
    for n in range(1, n_max + 1):
        p = np.count_nonzero(t > n) / samples
        rows.append({"n": n, "exact": tail_exact(ctx, N, n), "mc": mu_y * p,
                     "stderr": mu_y * math.sqrt(p * (1 - p) / samples)})
    return TailReport(ctx.q, N, a, samples, seed, rows, censored)


# -- ratio mixing --------------------------------------------------------------

def mu_preimage_intersection(ctx: RingContext, U, V, n: int, cap: int = DEFAULT_CAP) -> float:
    """mu(F^{-n}(U) n V) = sum_h mu(h.U n V)."""
    (u0, u1), (v0, v1) = U, V
    if u0 <= 0 or v0 <= 0:
        raise ValueError("U and V must be bounded away from 0")

    def term(M):
        a, b, c, d = M.T
        p = (a * u0 + b) / (c * u0 + d)
        r = (a * u1 + b) / (c * u1 + d)
        lo = np.maximum(np.minimum(p, r), v0)
        hi = np.minimum(np.maximum(p, r), v1)
        ok = hi > lo
        out = np.zeros_like(lo)
        out[ok] = np.log(hi[ok] / lo[ok])
        return out

    return word_sum(ctx, n, term, cap)


def mixing_statistic(ctx: RingContext, U, V, n: int, cap: int = DEFAULT_CAP) -> float:
    return math.log(n) * mu_preimage_intersection(ctx, U, V, n, cap)


def indifferent_index(ctx: RingContext) -> int:
    return indifferent_letter(ctx)


# -- trend tables ---------------------------------------------------------------

def convergence_table(ctx: RingContext, alpha: float, beta: float, n_max: int,
                      cap: int = DEFAULT_CAP) -> list[dict]:
    """Rows n, Leb(F^{-n}[alpha, beta]), log(n) times that, and the limit log(beta/alpha)."""
    target = math.log(beta / alpha)
    rows = []
    for n in range(1, n_max + 1):
        leb = preimage_lebesgue_words(ctx, n, alpha, beta, cap)
        rows.append({"n": n, "leb": leb, "scaled": math.log(n) * leb, "limit": target})
    return rows


def mixing_table(ctx: RingContext, U, V, n_max: int, cap: int = DEFAULT_CAP) -> list[dict]:
    target = mu_interval(ctx, *U) * mu_interval(ctx, *V)
    return [{"n": n, "statistic": mixing_statistic(ctx, U, V, n, cap), "limit": target}
            for n in range(2, n_max + 1)]
