"""Matrices over Z[lambda_q] modulo sign, the Hecke generators and the
inverse-branch alphabet, Moebius actions and word enumeration.
"""
from __future__ import annotations

import math
from functools import cmp_to_key
from itertools import product

import numpy as np

from .algring import RingContext, RingElem, chebyshev_s, field_coordinates, to_float
from .errors import CapExceeded

DEFAULT_CAP = 16


def _normalize(entries):
    # first nonzero of (c, d, a, b) positive
    a, b, c, d = entries
    for e in (c, d, a, b):
        s = e.sign()
        if s:
            if s < 0:
                return (-a, -b, -c, -d)
            return entries
    raise ValueError("zero matrix")


class GroupElem:
    """A 2x2 matrix over Z[lambda] with det = +-1, identified with its negative."""

    __slots__ = ("a", "b", "c", "d", "det", "_floats", "_hash")

    def __init__(self, a: RingElem, b: RingElem, c: RingElem, d: RingElem, *, check: bool = True):
        a, b, c, d = _normalize((a, b, c, d))
        self.a, self.b, self.c, self.d = a, b, c, d
        det = a * d - b * c
        if det == 1:
            self.det = 1
        elif det == -1:
            self.det = -1
        else:
            raise ValueError(f"determinant {det!r} is not +-1")
        self._floats = None
        self._hash = None

    @classmethod
    def from_ints(cls, ctx: RingContext, rows) -> "GroupElem":
        (a, b), (c, d) = rows
        conv = lambda v: v if isinstance(v, RingElem) else ctx.from_int(v)  # noqa: E731
        return cls(conv(a), conv(b), conv(c), conv(d))

    @property
    def ctx(self) -> RingContext:
        return self.a.ctx

    def entries(self):
        return self.a, self.b, self.c, self.d

    def __mul__(self, other: "GroupElem") -> "GroupElem":
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return GroupElem(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "GroupElem":
        return GroupElem(self.d, -self.b, -self.c, self.a)

    def __pow__(self, n: int) -> "GroupElem":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = identity(self.ctx)
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, GroupElem):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(e.coeffs for e in self.entries()))
        return self._hash

    def float_entries(self) -> tuple[float, float, float, float]:
        if self._floats is None:
            self._floats = tuple(to_float(e) for e in self.entries())
        return self._floats

    def is_identity(self) -> bool:
        return self.b.is_zero() and self.c.is_zero() and self.a == self.d

    def to_json(self) -> dict:
        return {"a": self.a.to_json(), "b": self.b.to_json(), "c": self.c.to_json(),
                "d": self.d.to_json(), "det": self.det}

    @classmethod
    def from_json(cls, ctx: RingContext, data: dict) -> "GroupElem":
        g = cls(*(ctx.from_json(data[k]) for k in "abcd"))
        if g.det != data["det"]:
            raise ValueError("det field does not match entries")
        return g

    def __repr__(self):
        fl = ", ".join(f"{x:.6g}" for x in self.float_entries())
        return f"GroupElem([{fl}], det={self.det:+d})"


def identity(ctx: RingContext) -> GroupElem:
    return GroupElem(ctx.one, ctx.zero, ctx.zero, ctx.one)


class ProjPoint:
    """A point of P^1(R) as a sign-normalised pair (numerator, denominator)."""

    __slots__ = ("num", "den", "_key", "_float")

    def __init__(self, num: RingElem, den: RingElem):
        if num.is_zero() and den.is_zero():
            raise ValueError("(0, 0) is not a projective point")
        s = den.sign() or num.sign()
        if s < 0:
            num, den = -num, -den
        self.num, self.den = num, den
        self._key = None
        self._float = None

    @classmethod
    def of(cls, ctx: RingContext, num, den=1) -> "ProjPoint":
        conv = lambda v: v if isinstance(v, RingElem) else ctx.from_int(v)  # noqa: E731
        return cls(conv(num), conv(den))

    @property
    def ctx(self) -> RingContext:
        return self.num.ctx

    def is_infinite(self) -> bool:
        return self.den.is_zero()

    def key(self):
        """Canonical hashable form: rational coordinates of num/den in Q(lambda)."""
        if self._key is None:
            if self.is_infinite():
                self._key = ("inf",)
            else:
                self._key = field_coordinates(self.num, self.den)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return (self.num * other.den - other.num * self.den).is_zero()

    def __hash__(self):
        return hash(self.key())

    def compare(self, other: "ProjPoint") -> int:
        if self.is_infinite() or other.is_infinite():
            raise ValueError("infinity is not ordered")
        # denominators are positive after normalisation
        return (self.num * other.den - other.num * self.den).sign()

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def to_float(self) -> float:
        if self._float is None:
            if self.is_infinite():
                self._float = math.inf
            else:
                self._float = float(to_float(self.num, 80) / to_float(self.den, 80))
        return self._float

    def __float__(self):
        return self.to_float()

    def __repr__(self):
        return f"ProjPoint({self.num.coeffs}/{self.den.coeffs} ~ {self.to_float():.12g})"


def sort_points(points) -> list[ProjPoint]:
    return sorted(points, key=cmp_to_key(ProjPoint.compare))


# -- generators and branch elements -----------------------------------------

def generators(ctx: RingContext):
    """(T, S, U, Q) with T = [[1, lambda], [0, 1]], S = [[0, 1], [-1, 0]],
    U = T S and Q = [[0, 1], [1, 0]]."""
    o, z, lam = ctx.one, ctx.zero, ctx.lam
    T = GroupElem(o, lam, z, o)
    S = GroupElem(z, o, -o, z)
    U = T * S
    Q = GroupElem(z, o, o, z)
    return T, S, U, Q


def branch_element(ctx: RingContext, k: int) -> GroupElem:
    """g_{q,k} = (U^k S)^{-1} = [[s(k), -s(k+1)], [-s(k-1), s(k)]]."""
    s = lambda j: chebyshev_s(ctx, j)  # noqa: E731
    return GroupElem(s(k), -s(k + 1), -s(k - 1), s(k))


def q_element(ctx: RingContext) -> GroupElem:
    return generators(ctx)[3]


def branch_range(q: int) -> range:
    return range((q + 1) // 2, q)


def alphabet(ctx: RingContext) -> list[GroupElem]:
    """Lambda_q in canonical order: g_k^{-1} for k = (q+1)/2..q-1, then (Q g_k)^{-1}."""
    cached = _ALPHABETS.get(ctx.q)
    if cached is not None:
        return list(cached)
    Q = q_element(ctx)
    ks = branch_range(ctx.q)
    letters = [branch_element(ctx, k).inverse() for k in ks]
    letters += [(Q * branch_element(ctx, k)).inverse() for k in ks]
    _ALPHABETS[ctx.q] = tuple(letters)
    return letters


_ALPHABETS: dict[int, tuple] = {}


def indifferent_letter(ctx: RingContext) -> int:
    """Index in the alphabet of g_{q-1}^{-1} = [[1, 0], [lambda, 1]]."""
    return (ctx.q - 1) // 2 - 1


# -- actions ----------------------------------------------------------------

def moebius_apply(g: GroupElem, p: ProjPoint) -> ProjPoint:
    return ProjPoint(g.a * p.num + g.b * p.den, g.c * p.num + g.d * p.den)


def moebius_apply_float(g: GroupElem, x: float) -> float:
    a, b, c, d = g.float_entries()
    den = c * x + d
    if den == 0:
        raise ZeroDivisionError("image is infinity")
    return (a * x + b) / den


def derivative_float(g: GroupElem, x: float) -> float:
    _, _, c, d = g.float_entries()
    den = c * x + d
    if den == 0:
        raise ZeroDivisionError(f"pole at x = {x}")
    return g.det / (den * den)


def derivative_abs(g: GroupElem, x: float) -> float:
    return abs(derivative_float(g, x))


# -- words ------------------------------------------------------------------

def check_cap(q: int, n: int, cap: int = DEFAULT_CAP) -> None:
    if n < 0:
        raise ValueError("word length must be >= 0")
    if n > cap:
        raise CapExceeded(f"W_{{{q},{n}}} has {(q - 1) ** n:.3e} words; "
                          f"depth {n} exceeds the enumeration cap {cap}")


def word_compose(ctx: RingContext, word) -> GroupElem:
    letters = alphabet(ctx)
    g = identity(ctx)
    for i in word:
        g = g * letters[i]
    return g


def word_from_index(q: int, n: int, index: int) -> tuple:
    base = q - 1
    out = [0] * n
    for pos in range(n - 1, -1, -1):
        index, out[pos] = divmod(index, base)
    return tuple(out)


def words_iter(ctx: RingContext, n: int, start: int = 0, stop: int | None = None,
               cap: int = DEFAULT_CAP):
    """Words of length n in lexicographic order, restricted to indices [start, stop)."""
    check_cap(ctx.q, n, cap)
    total = (ctx.q - 1) ** n
    stop = total if stop is None else min(stop, total)
    if start == 0 and stop == total:
        yield from product(range(ctx.q - 1), repeat=n)
        return
    base = ctx.q - 1
    word = list(word_from_index(ctx.q, n, start))
    for _ in range(start, stop):
        yield tuple(word)
        pos = n - 1
        while pos >= 0:
            word[pos] += 1
            if word[pos] < base:
                break
            word[pos] = 0
            pos -= 1


def parse_word(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(t) for t in text.split(","))


def format_word(word) -> str:
    return ",".join(str(i) for i in word)


def compose_level(ctx: RingContext, n: int, cap: int = DEFAULT_CAP) -> list[GroupElem]:
    """All word_compose(w) for w in W_n, in lexicographic order (materialised)."""
    check_cap(ctx.q, n, cap)
    letters = alphabet(ctx)
    level = [identity(ctx)]
    for _ in range(n):
        level = [g * p for g in level for p in letters]
    return level


# -- float word streams ------------------------------------------------------

def alphabet_float(ctx: RingContext) -> np.ndarray:
    """Alphabet as an array of shape (q-1, 4): columns a, b, c, d."""
    return np.array([p.float_entries() for p in alphabet(ctx)], dtype=float)


def _suffix_block(letters: np.ndarray, m: int) -> np.ndarray:
    block = np.array([[1.0, 0.0, 0.0, 1.0]])
    for _ in range(m):
        a, b, c, d = (letters[:, i][:, None] for i in range(4))
        e, f, g, h = (block[:, i][None, :] for i in range(4))
        block = np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], axis=-1)
        block = block.reshape(-1, 4)
    return block


def word_matrix_chunks(ctx: RingContext, n: int, block_depth: int = 8, cap: int = DEFAULT_CAP):
    """Yield (chunk_index, M) with M of shape (K, 4) holding float matrices of
    consecutive words of W_n in lexicographic order."""
    check_cap(ctx.q, n, cap)
    letters = alphabet_float(ctx)
    m = min(n, block_depth)
    block = _suffix_block(letters, m)
    prefix_len = n - m
    if prefix_len == 0:
        yield 0, block
        return
    e, f, g, h = (block[:, i] for i in range(4))
    for j, word in enumerate(product(range(ctx.q - 1), repeat=prefix_len)):
        P = np.array([1.0, 0.0, 0.0, 1.0])
        for i in word:
            a, b, c, d = P
            la, lb, lc, ld = letters[i]
            P = np.array([a * la + b * lc, a * lb + b * ld, c * la + d * lc, c * lb + d * ld])
        a, b, c, d = P
        yield j, np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], axis=-1)


def word_dets(ctx: RingContext, n: int) -> np.ndarray:
    """Determinants of all words of W_n in lexicographic order."""
    dets = np.array([p.det for p in alphabet(ctx)], dtype=np.int8)
    out = np.ones(1, dtype=np.int8)
    for _ in range(n):
        out = (dets[:, None] * out[None, :]).reshape(-1)
    return out


# -- grid checks of order and derivative bounds ------------------------------------------------------

def order_violations(ctx: RingContext, grid: int = 64) -> list:
    """(letter, k) pairs where g_{q-1}^{-1}.x <= p.x fails at x = k/grid (exact)."""
    letters = alphabet(ctx)
    g = letters[indifferent_letter(ctx)]
    bad = []
    for k in range(grid + 1):
        x = ProjPoint.of(ctx, k, grid)
        gx = moebius_apply(g, x)
        for i, p in enumerate(letters):
            if gx.compare(moebius_apply(p, x)) > 0:
                bad.append((i, k))
    return bad


def extremal_derivative_excess(ctx: RingContext, n: int, grid: int = 64) -> float:
    """max over W_n and x = k/grid of |h'(x)| - 1/(n lambda x + 1)^2 (<= 0 expected)."""
    xs = np.linspace(0.0, 1.0, grid + 1)
    bound = 1.0 / (n * ctx.lambda_float * xs + 1.0) ** 2
    worst = -math.inf
    for _, M in word_matrix_chunks(ctx, n):
        den = np.outer(M[:, 2], xs) + M[:, 3][:, None]
        worst = max(worst, float(np.max(1.0 / (den * den) - bound)))
    return worst


def derivative_monotone(ctx: RingContext, n: int, grid: int = 64) -> bool:
    """|h'| is non-increasing on the grid for every h in W_n."""
    xs = np.linspace(0.0, 1.0, grid + 1)
    for _, M in word_matrix_chunks(ctx, n):
        if np.any(M[:, 2] < 0) or np.any(M[:, 3] <= 0):
            return False
        den = np.outer(M[:, 2], xs) + M[:, 3][:, None]
        if np.any(np.diff(1.0 / (den * den), axis=1) > 0):
            return False
    return True
