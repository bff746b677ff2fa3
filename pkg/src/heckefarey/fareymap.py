"""The generalised Farey map F_q on [0, 1]: branches, orbits, preimages,
Stern-Brocot levels, the sweep-out sets and return/hitting times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algring import RingContext
from .errors import TilingError
from .heckegroup import (
    DEFAULT_CAP,
    GroupElem,
    ProjPoint,
    alphabet,
    check_cap,
    indifferent_letter,
    moebius_apply,
    moebius_apply_float,
    sort_points,
    word_matrix_chunks,
)

SNAP_TOL = 1e-14
HITTING_CAP = 10**6
NEVER = math.inf


@dataclass(frozen=True)
class ExactInterval:
    left: ProjPoint
    right: ProjPoint
    left_closed: bool = True
    right_closed: bool = True

    def __post_init__(self):
        if self.right < self.left:
            raise ValueError("left endpoint exceeds right endpoint")

    def float_bounds(self) -> tuple[float, float]:
        return self.left.to_float(), self.right.to_float()

    def contains_float(self, x: float) -> bool:
        lo, hi = self.float_bounds()
        above = x >= lo if self.left_closed else x > lo
        below = x <= hi if self.right_closed else x < hi
        return above and below

    def same_as(self, other: "ExactInterval") -> bool:
        return (self.left == other.left and self.right == other.right
                and self.left_closed == other.left_closed
                and self.right_closed == other.right_closed)

    def __repr__(self):
        lb = "[" if self.left_closed else "("
        rb = "]" if self.right_closed else ")"
        return f"{lb}{self.left.to_float():.12g}, {self.right.to_float():.12g}{rb}"


@dataclass(frozen=True)
class Branch:
    element: GroupElem      # g_k or Q g_k, acting on the branch domain
    domain: ExactInterval
    letter_index: int       # position of element^{-1} in the alphabet

    @property
    def det(self) -> int:
        return self.element.det


_PARTITIONS: dict[int, tuple] = {}


def branch_partition(ctx: RingContext) -> list[Branch]:
    """The q-1 branches of F_q sorted left to right, tiling verified exactly."""
    hit = _PARTITIONS.get(ctx.q)
    if hit is not None:
        return list(hit)
    zero, one = ProjPoint.of(ctx, 0), ProjPoint.of(ctx, 1)
    branches = []
    for i, p in enumerate(alphabet(ctx)):
        ends = [moebius_apply(p, zero), moebius_apply(p, one)]
        lo, hi = (ends[0], ends[1]) if p.det > 0 else (ends[1], ends[0])
        branches.append(Branch(p.inverse(), ExactInterval(lo, hi), i))
    branches = [b for _, b in sorted(
        enumerate(branches), key=lambda t: _SortKey(t[1].domain.left))]
    if branches[0].domain.left != zero or branches[-1].domain.right != one:
        raise TilingError("branch domains do not start at 0 and end at 1")
    for left, right in zip(branches, branches[1:]):
        if left.domain.right != right.domain.left:
            raise TilingError(f"gap or overlap between {left.domain} and {right.domain}")
        if not left.domain.left < left.domain.right:
            raise TilingError("degenerate branch domain")
    _PARTITIONS[ctx.q] = tuple(branches)
    return branches


class _SortKey:
    __slots__ = ("p",)

    def __init__(self, p):
        self.p = p

    def __lt__(self, other):
        return self.p < other.p


def breakpoints(ctx: RingContext) -> list[ProjPoint]:
    """Interior breakpoints, increasing."""
    return [b.domain.right for b in branch_partition(ctx)[:-1]]


class FloatMap:
    """Vectorised floating-point evaluation of F_q."""

    def __init__(self, ctx: RingContext):
        parts = branch_partition(ctx)
        self.q = ctx.q
        self.edges = np.array([b.domain.right.to_float() for b in parts[:-1]])
        self.mats = np.array([b.element.float_entries() for b in parts])

    def branch_index(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="left")
        # points within SNAP_TOL of a breakpoint use the left branch
        below = np.clip(idx - 1, 0, len(self.edges) - 1)
        near = (idx > 0) & (np.abs(x - self.edges[below]) <= SNAP_TOL)
        return np.where(near, idx - 1, idx)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.branch_index(x)
        a, b, c, d = (self.mats[idx, i] for i in range(4))
        y = (a * x + b) / (c * x + d)
        y = np.clip(y, 0.0, 1.0)
        return np.where(x >= 1.0, 0.0, np.where(x <= 0.0, 0.0, y))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.branch_index(x)
        a, b, c, d = (self.mats[idx, i] for i in range(4))
        det = a * d - b * c
        return np.sign(det) / (c * x + d) ** 2


_FLOAT_MAPS: dict[int, FloatMap] = {}


def float_map(ctx: RingContext) -> FloatMap:
    fm = _FLOAT_MAPS.get(ctx.q)
    if fm is None:
        fm = _FLOAT_MAPS[ctx.q] = FloatMap(ctx)
    return fm


def _check_unit(x: float) -> None:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x = {x} is outside [0, 1]")


def farey_apply_float(ctx: RingContext, x: float) -> float:
    _check_unit(x)
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(float_map(ctx).apply(x))


def farey_apply_exact(ctx: RingContext, p: ProjPoint) -> ProjPoint:
    zero, one = ProjPoint.of(ctx, 0), ProjPoint.of(ctx, 1)
    if p.is_infinite() or p < zero or p > one:
        raise ValueError(f"{p} is outside [0, 1]")
    if p == one:
        return zero
    parts = branch_partition(ctx)
    lo, hi = 0, len(parts) - 1
    # first branch whose right endpoint is >= p (left-closed convention)
    while lo < hi:
        mid = (lo + hi) // 2
        if p <= parts[mid].domain.right:
            hi = mid
        else:
            lo = mid + 1
    return moebius_apply(parts[lo].element, p)


def farey_orbit(ctx: RingContext, x: float, n: int) -> list[float]:
    """x, F(x), ..., F^n(x)."""
    _check_unit(x)
    out = [float(x)]
    fm = float_map(ctx)
    for _ in range(n):
        x = out[-1]
        out.append(0.0 if x in (0.0, 1.0) else float(fm.apply(x)))
    return out


# -- preimages and Stern-Brocot levels ----------------------------------------

def _dedup(points):
    seen = {}
    for p in points:
        seen.setdefault(p.key(), p)
    return list(seen.values())


def inverse_images(ctx: RingContext, points, n: int, cap: int = DEFAULT_CAP) -> set:
    """{h.p : h in W_n, p in points}, deduplicated exactly."""
    check_cap(ctx.q, n, cap)
    letters = alphabet(ctx)
    level = _dedup(points)
    for _ in range(n):
        level = _dedup(moebius_apply(g, p) for p in level for g in letters)
    return set(level)


def stern_brocot_tilde(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> list[list[ProjPoint]]:
    """[S~_0, ..., S~_n] with S~_k = F^{-k}(0) u F^{-k}(1), each unsorted."""
    check_cap(ctx.q, n, cap)
    letters = alphabet(ctx)
    level = [ProjPoint.of(ctx, 0), ProjPoint.of(ctx, 1)]
    out = [level]
    for _ in range(n):
        level = _dedup(moebius_apply(g, p) for p in level for g in letters)
        out.append(level)
    return out


def stern_brocot_levels(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> list[list[ProjPoint]]:
    """[S_0, ..., S_n], each sorted; S_k holds the points first appearing at level k."""
    tilde = stern_brocot_tilde(ctx, n, cap)
    levels = [sort_points(tilde[0])]
    for k in range(1, n + 1):
        old = {p.key() for p in tilde[k - 1]}
        levels.append(sort_points(p for p in tilde[k] if p.key() not in old))
    return levels


def stern_brocot_level(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> list[ProjPoint]:
    return stern_brocot_levels(ctx, n, cap)[n]


# -- interval sets and the sweep-out identity ------------------------------------

@dataclass(frozen=True)
class _Piece:
    left: ProjPoint
    left_closed: bool
    right: ProjPoint
    right_closed: bool


def _image_piece(g: GroupElem, piece: _Piece) -> _Piece:
    lo, hi = moebius_apply(g, piece.left), moebius_apply(g, piece.right)
    if g.det > 0:
        return _Piece(lo, piece.left_closed, hi, piece.right_closed)
    return _Piece(hi, piece.right_closed, lo, piece.left_closed)


def _merge(pieces) -> list[_Piece]:
    pieces = sorted(pieces, key=lambda p: (_SortKey(p.left), not p.left_closed))
    out = []
    for p in pieces:
        if out:
            cur = out[-1]
            c = p.left.compare(cur.right)
            if c < 0 or (c == 0 and (p.left_closed or cur.right_closed)):
                rc = p.right.compare(cur.right)
                if rc > 0:
                    out[-1] = _Piece(cur.left, cur.left_closed, p.right, p.right_closed)
                elif rc == 0:
                    out[-1] = _Piece(cur.left, cur.left_closed, cur.right,
                                     cur.right_closed or p.right_closed)
                continue
        out.append(p)
    return out


def sweep_out_union(ctx: RingContext, n: int, audit: bool = False,
                    cap: int = DEFAULT_CAP) -> ExactInterval:
    """union_{k<n} F^{-k}(A) = (1/(n lambda + 1), 1], A = (1/(lambda+1), 1].

    With ``audit`` the union is also built as an exact interval-set union of
    inverse-branch images and compared with the closed form.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    left = ProjPoint(ctx.one, ctx.from_int(n) * ctx.lam + ctx.one)
    result = ExactInterval(left, ProjPoint.of(ctx, 1), left_closed=False, right_closed=True)
    if audit:
        check_cap(ctx.q, n, cap)
        pieces = sweep_out_pieces(ctx, n)
        if len(pieces) != 1:
            raise AssertionError(f"sweep-out union has {len(pieces)} components")
        p = pieces[0]
        got = ExactInterval(p.left, p.right, p.left_closed, p.right_closed)
        if not got.same_as(result):
            raise AssertionError(f"sweep-out union {got} differs from {result}")
    return result


def sweep_out_pieces(ctx: RingContext, n: int) -> list[_Piece]:
    """Exact interval-set union of F^{-k}(A), k < n.

    Uses U_1 = A and U_{k+1} = A u F^{-1}(U_k), with F^{-1}(B) the union of
    the inverse-branch images of B.
    """
    one = ProjPoint.of(ctx, 1)
    A = [_Piece(ProjPoint(ctx.one, ctx.lam + ctx.one), False, one, True)]
    letters = alphabet(ctx)
    union = list(A)
    for _ in range(1, n):
        union = _merge(A + [_image_piece(g, p) for p in union for g in letters])
    return union


def sweep_closed_form_check(ctx: RingContext, n_max: int) -> int:
    """Check g_{q-1}^{-n}.1 = 1/(n lambda + 1) exactly for n = 1..n_max.

    Iterates the indifferent letter on the pair (1, 1) and compares with the
    closed-form pair; returns the first failing n, or 0 if all agree.
    Multiplication by each fixed matrix entry is a linear map on coefficient
    vectors, so the loop runs on integer tuples.
    """
    g = alphabet(ctx)[indifferent_letter(ctx)]
    d = ctx.d
    basis = [ctx.elem([int(i == j) for i in range(d)]) for j in range(d)]

    def linear(e):
        cols = [(e * b).coeffs for b in basis]
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    A, B, C, D = (linear(e) for e in g.entries())

    def apply(M, v):
        return [sum(m * x for m, x in zip(row, v)) for row in M]

    r, s = list(ctx.one.coeffs), list(ctx.one.coeffs)
    one, lam = list(ctx.one.coeffs), list(ctx.lam.coeffs)
    expected = list(one)
    for n in range(1, n_max + 1):
        r, s = ([x + y for x, y in zip(apply(A, r), apply(B, s))],
                [x + y for x, y in zip(apply(C, r), apply(D, s))])
        expected = [x + y for x, y in zip(expected, lam)]
        if r != one or s != expected:
            return n
    return 0


def y_of_compact(ctx: RingContext, C: ExactInterval) -> tuple[int, ExactInterval]:
    """Least N with 1/((N+1) lambda + 1) < C.left, and Y = (1/((N+1) lambda + 1), 1]."""
    zero = ProjPoint.of(ctx, 0)
    if C.left <= zero:
        raise ValueError("C must be bounded away from 0")
    c = C.left.to_float()
    N = max(0, int(math.floor((1.0 / c - 1.0) / ctx.lambda_float)))

    def ok(m):
        return ProjPoint(ctx.one, ctx.from_int(m + 1) * ctx.lam + ctx.one) < C.left

    # repair float rounding with exact comparisons
    while not ok(N):
        N += 1
    while N > 0 and ok(N - 1):
        N -= 1
    return N, sweep_out_union(ctx, N + 1)


# -- return and hitting times -------------------------------------------------

def first_hitting_time(ctx: RingContext, x: float, Y: ExactInterval, cap: int = HITTING_CAP):
    """Least n >= 1 with F^n(x) in Y, or NEVER if not reached within ``cap`` steps."""
    _check_unit(x)
    fm = float_map(ctx)
    lo, hi = Y.float_bounds()
    lc, rc = Y.left_closed, Y.right_closed
    for n in range(1, cap + 1):
        x = 0.0 if x in (0.0, 1.0) else float(fm.apply(x))
        if (x >= lo if lc else x > lo) and (x <= hi if rc else x < hi):
            return n
    return NEVER


def first_return_time(ctx: RingContext, x: float, Y: ExactInterval, cap: int = HITTING_CAP):
    if not Y.contains_float(x):
        raise ValueError(f"x = {x} is not in {Y}")
    return first_hitting_time(ctx, x, Y, cap)


def return_times_array(ctx: RingContext, xs: np.ndarray, lo: float, n_max: int) -> np.ndarray:
    """Vectorised first hitting times of (lo, 1] up to n_max; n_max + 1 marks censored."""
    fm = float_map(ctx)
    x = np.array(xs, dtype=float)
    out = np.full(x.shape, n_max + 1, dtype=np.int64)
    alive = np.ones(x.shape, dtype=bool)
    for n in range(1, n_max + 1):
        x = fm.apply(x)
        hit = alive & (x > lo)
        out[hit] = n
        alive &= ~hit
        if not alive.any():
            break
    return out


# -- diagnostics for the AFN and mixing properties ------------------------------

def cylinder_diameters(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Diameters of h.[0, 1] for h in W_n (lexicographic order)."""
    out = []
    for _, M in word_matrix_chunks(ctx, n, cap=cap):
        a, b, c, d = M.T
        out.append(np.abs((a + b) / (c + d) - b / d))
    return np.concatenate(out)


def max_cylinder_diameter(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> float:
    """Largest level-n cylinder, excluding the one at 0 (the indifferent word)."""
    diam = cylinder_diameters(ctx, n, cap)
    L = indifferent_letter(ctx)
    base = ctx.q - 1
    idx0 = sum(L * base ** i for i in range(n))
    diam = diam.copy()
    diam[idx0] = 0.0
    return float(diam.max())


def expansion_report(ctx: RingContext, eps: float = 0.05, grid: int = 200) -> dict:
    """Minimum |F'| on each branch over a grid, with the bounds it must meet."""
    lam = ctx.lambda_float
    parts = branch_partition(ctx)
    L = indifferent_letter(ctx)
    rows = []
    for b in parts:
        lo, hi = b.domain.float_bounds()
        xs = np.linspace(lo, hi, grid)
        if b.letter_index == L:
            xs = xs[xs >= eps]
            bound = 1.0 / (1.0 - lam * eps) ** 2 if xs.size else None
        else:
            bound = lam * lam
        if xs.size == 0:
            continue
        vals = np.array([abs(moebius_derivative(b.element, x)) for x in xs])
        rows.append({"letter": b.letter_index, "det": b.det, "min_abs_derivative": float(vals.min()),
                     "bound": bound, "indifferent": b.letter_index == L})
    return {"q": ctx.q, "eps": eps, "branches": rows}


def moebius_derivative(g: GroupElem, x: float) -> float:
    _, _, c, d = g.float_entries()
    return g.det / (c * x + d) ** 2


def adler_report(ctx: RingContext, grid: int = 200) -> tuple[float, float]:
    """(max over branches and grid of |F''/(F')^2|, the a-priori bound 2 max |c|(|c|+|d|))."""
    worst, bound = 0.0, 0.0
    for b in branch_partition(ctx):
        _, _, c, d = b.element.float_entries()
        lo, hi = b.domain.float_bounds()
        xs = np.linspace(lo, hi, grid)
        worst = max(worst, float(np.max(np.abs(-2 * c * b.det * (c * xs + d)))))
        bound = max(bound, 2 * abs(c) * (abs(c) + abs(d)))
    return worst, bound


def indifferent_fixed_points(ctx: RingContext) -> list[tuple[int, ProjPoint]]:
    """(branch position, point) for boundary fixed points with |F'| = 1."""
    found = []
    for pos, b in enumerate(branch_partition(ctx)):
        g = b.element
        for p in (b.domain.left, b.domain.right):
            if moebius_apply(g, p) == p:
                # |g'(p)| = 1  <=>  (c p + d r)^2 = r^2
                den = g.c * p.num + g.d * p.den
                if den * den == p.den * p.den:
                    found.append((pos, p))
    return found


def apply_letters_float(ctx: RingContext, x: float) -> list[float]:
    return [moebius_apply_float(p, x) for p in alphabet(ctx)]
