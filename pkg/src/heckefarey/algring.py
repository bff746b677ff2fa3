"""Exact arithmetic in Z[lambda_q], lambda_q = 2cos(pi/q), for odd q >= 3.

Elements are integer coefficient vectors in the power basis 1, lambda, ...,
lambda^(d-1), reduced modulo the minimal polynomial after every product.
Signs are decided exactly: a cheap floating-point filter first, then
dyadic interval evaluation at a verified enclosure of lambda with precision
doubling.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from math import gcd

import mpmath

from .errors import ContextMismatch, PrecisionExhausted

START_PRECISION = 128
PRECISION_CAP = 8192

# Relative slack for the float sign filter. The true evaluation error is
# below ~4 * 2**-53 of the absolute coefficient mass for d <= 64.
_FILTER_SLACK = 1e-12


# -- integer polynomials (constant coefficient first) ----------------------

def _poly_trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _poly_sub(p, r):
    n = max(len(p), len(r))
    out = [(p[i] if i < len(p) else 0) - (r[i] if i < len(r) else 0) for i in range(n)]
    return _poly_trim(out)


def _poly_shift(p):
    return [0] + list(p)


def chebyshev_u_tilde(n: int) -> list[int]:
    """U~_n(x) = U_n(x/2), the integer polynomial with roots 2cos(j pi/(n+1)).

    Built by p_0 = 0, p_1 = 1, p_{k+1} = x p_k - p_{k-1}; U~_n = p_{n+1}.
    """
    if n < -1:
        raise ValueError("n must be >= -1")
    prev, cur = [0], [1]
    if n == -1:
        return prev
    for _ in range(n):
        prev, cur = cur, _poly_sub(_poly_shift(cur), prev)
    return cur


def poly_divmod_monic(num, den):
    """Quotient and remainder of integer polynomials, ``den`` monic."""
    den = _poly_trim(den)
    if den[-1] != 1:
        raise ValueError("divisor must be monic")
    rem = list(_poly_trim(num))
    dd = len(den) - 1
    if len(rem) - 1 < dd:
        return [0], rem
    quot = [0] * (len(rem) - dd)
    for i in range(len(rem) - 1, dd - 1, -1):
        c = rem[i]
        if c == 0:
            continue
        quot[i - dd] = c
        for j in range(dd + 1):
            rem[i - dd + j] -= c * den[j]
    return _poly_trim(quot), _poly_trim(rem[:dd] or [0])


def _conjugate_indices(q: int) -> list[int]:
    return [k for k in range(1, q) if k % 2 == 1 and gcd(k, q) == 1]


def _minpoly_at_precision(q: int, prec: int):
    mp = mpmath.MPContext()
    mp.prec = prec
    coeffs = [mp.mpf(1)]
    for k in _conjugate_indices(q):
        root = 2 * mp.cos(k * mp.pi / q)
        # multiply by (x - root)
        nxt = [mp.mpf(0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= root * c
        coeffs = nxt
    rounded = [int(mp.nint(c)) for c in coeffs]
    worst = max(abs(c - r) for c, r in zip(coeffs, rounded))
    return rounded, float(worst)


class RingContext:
    """Immutable description of Z[lambda_q]."""

    __slots__ = ("q", "minpoly", "d", "default_precision", "_reduce_table",
                 "_lam_pows", "_enclosures", "_s_cache")

    def __init__(self, q: int, minpoly, default_precision: int = START_PRECISION):
        self.q = q
        self.minpoly = tuple(minpoly)
        self.d = len(self.minpoly) - 1
        self.default_precision = default_precision
        self._enclosures = {}
        self._s_cache = {}
        d = self.d
        # lambda^k for k = d .. 2d-2 in the power basis
        table = []
        cur = [-c for c in self.minpoly[:d]]
        for _ in range(max(d - 1, 0)):
            table.append(tuple(cur))
            top = cur[-1]
            cur = [0] + cur[:-1]
            if top:
                for j in range(d):
                    cur[j] -= top * self.minpoly[j]
        self._reduce_table = tuple(table)
        mp = mpmath.MPContext()
        mp.prec = 200
        lam = 2 * mp.cos(mp.pi / q)
        self._lam_pows = tuple(float(lam ** i) for i in range(d))

    def __repr__(self):
        return f"RingContext(q={self.q}, minpoly={list(self.minpoly)})"

    def __reduce__(self):
        return (ring_context_new, (self.q,))

    @property
    def lambda_float(self) -> float:
        return 2.0 * math.cos(math.pi / self.q)

    def lambda_enclosure(self, prec: int) -> tuple[int, int]:
        """Integers (lo, hi) with lo/2**prec <= lambda <= hi/2**prec.

        The enclosure is certified by an exact sign change of the minimal
        polynomial; its width is far below the conjugate root separation.
        """
        hit = self._enclosures.get(prec)
        if hit is not None:
            return hit
        mp = mpmath.MPContext()
        mp.prec = prec + 40
        approx = 2 * mp.cos(mp.pi / self.q)
        lo = int(mp.floor(approx * mp.mpf(2) ** prec)) - 1
        hi = lo + 3
        f_lo = _eval_scaled(self.minpoly, lo, prec)
        f_hi = _eval_scaled(self.minpoly, hi, prec)
        if f_lo == 0 or f_hi == 0 or (f_lo > 0) == (f_hi > 0):
            raise PrecisionExhausted(f"could not certify an enclosure of lambda_{self.q} at {prec} bits")
        self._enclosures[prec] = (lo, hi)
        return lo, hi

    # -- element construction --------------------------------------------

    def elem(self, coeffs) -> "RingElem":
        coeffs = [int(c) for c in coeffs]
        if len(coeffs) > self.d:
            coeffs = self._reduce(coeffs)
        coeffs += [0] * (self.d - len(coeffs))
        return RingElem(self, tuple(coeffs))

    def from_int(self, n: int) -> "RingElem":
        return RingElem(self, (int(n),) + (0,) * (self.d - 1))

    @property
    def zero(self) -> "RingElem":
        return self.from_int(0)

    @property
    def one(self) -> "RingElem":
        return self.from_int(1)

    @property
    def lam(self) -> "RingElem":
        if self.d == 1:
            # lambda_3 = 1
            return self.from_int(-self.minpoly[0])
        return self.elem([0, 1])

    def from_json(self, data) -> "RingElem":
        if len(data) != self.d:
            raise ValueError(f"expected {self.d} coefficients, got {len(data)}")
        return self.elem(data)

    def _reduce(self, prod):
        d = self.d
        out = list(prod[:d]) + [0] * max(0, d - len(prod))
        for k in range(d, len(prod)):
            c = prod[k]
            if c:
                row = self._reduce_table[k - d]
                for j in range(d):
                    out[j] += c * row[j]
        return out


def _eval_scaled(poly, x_num: int, prec: int) -> int:
    """2**(prec*deg) * poly(x_num / 2**prec), exactly."""
    deg = len(poly) - 1
    return sum(c * x_num ** i << (prec * (deg - i)) for i, c in enumerate(poly))


def verify_minpoly(q: int, minpoly) -> bool:
    """True iff ``minpoly`` is monic and exactly divides U~_{q-1}."""
    if minpoly[-1] != 1:
        return False
    _, rem = poly_divmod_monic(chebyshev_u_tilde(q - 1), minpoly)
    return all(c == 0 for c in rem)


@lru_cache(maxsize=None)
def ring_context_new(q: int) -> RingContext:
    """Build the context for odd q >= 3 (cached per q)."""
    if not isinstance(q, int) or isinstance(q, bool):
        raise TypeError("q must be an integer")
    if q < 3 or q % 2 == 0:
        raise ValueError(f"q must be odd and >= 3, got {q}")
    prec = START_PRECISION
    while prec <= PRECISION_CAP:
        coeffs, worst = _minpoly_at_precision(q, prec)
        if worst <= 0.25 and verify_minpoly(q, coeffs):
            return RingContext(q, coeffs)
        prec *= 2
    raise PrecisionExhausted(f"minimal polynomial for q={q} not certified within {PRECISION_CAP} bits")


class RingElem:
    """Immutable element of Z[lambda_q]."""

    __slots__ = ("ctx", "coeffs", "_sign")

    def __init__(self, ctx: RingContext, coeffs: tuple):
        self.ctx = ctx
        self.coeffs = coeffs
        self._sign = None

    def _check(self, other):
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if not isinstance(other, RingElem):
            return NotImplemented
        if other.ctx is not self.ctx and other.ctx.q != self.ctx.q:
            raise ContextMismatch(f"q={self.ctx.q} vs q={other.ctx.q}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return RingElem(self.ctx, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return RingElem(self.ctx, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return RingElem(self.ctx, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        d = len(a)
        if d == 1:
            return RingElem(self.ctx, (a[0] * b[0],))
        if not any(b[1:]):
            c = b[0]
            return RingElem(self.ctx, tuple(x * c for x in a))
        if not any(a[1:]):
            c = a[0]
            return RingElem(self.ctx, tuple(x * c for x in b))
        prod = [0] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return RingElem(self.ctx, tuple(self.ctx._reduce(prod)))

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ctx.from_int(other)
        if not isinstance(other, RingElem):
            return NotImplemented
        return self.ctx.q == other.ctx.q and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ctx.q, self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def sign(self) -> int:
        if self._sign is None:
            self._sign = _sign(self)
        return self._sign

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0

    def to_float(self, precision: int = 53):
        return to_float(self, precision)

    def __float__(self):
        return to_float(self, 53)

    def to_json(self) -> list[int]:
        return list(self.coeffs)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if i == 0 else f"{c}*l" if i == 1 else f"{c}*l^{i}")
        return f"RingElem({' + '.join(terms) or '0'}; q={self.ctx.q})"


def _sign(a: RingElem) -> int:
    coeffs = a.coeffs
    if not any(coeffs):
        return 0
    if not any(coeffs[1:]):
        c = coeffs[0]
        return (c > 0) - (c < 0)
    ctx = a.ctx
    try:
        terms = [float(c) * p for c, p in zip(coeffs, ctx._lam_pows)]
        mass = math.fsum(abs(t) for t in terms)
        val = math.fsum(terms)
        if math.isfinite(mass) and abs(val) > _FILTER_SLACK * mass:
            return 1 if val > 0 else -1
    except OverflowError:
        pass
    return _sign_interval(a)


def _sign_interval(a: RingElem) -> int:
    ctx = a.ctx
    prec = ctx.default_precision
    while prec <= PRECISION_CAP:
        lo, hi = ctx.lambda_enclosure(prec)
        one = 1 << prec
        p_lo, p_hi = one, one
        lower = upper = 0
        for i, c in enumerate(a.coeffs):
            if i > 0:
                p_lo = (p_lo * lo) >> prec
                p_hi = -((-p_hi * hi) >> prec)
            if c > 0:
                lower += c * p_lo
                upper += c * p_hi
            elif c < 0:
                lower += c * p_hi
                upper += c * p_lo
        if lower > 0:
            return 1
        if upper < 0:
            return -1
        prec *= 2
    raise PrecisionExhausted(f"sign of {a!r} undecided at {PRECISION_CAP} bits")


# -- grouped functional API ------------------------------------------------

def add(a: RingElem, b: RingElem) -> RingElem:
    return a + b


def neg(a: RingElem) -> RingElem:
    return -a


def mul(a: RingElem, b: RingElem) -> RingElem:
    return a * b


def equals(a: RingElem, b: RingElem) -> bool:
    a._check(b)
    return a.coeffs == b.coeffs


def sign(a: RingElem) -> int:
    return a.sign()


def compare(a: RingElem, b) -> int:
    if isinstance(b, int):
        b = a.ctx.from_int(b)
    return (a - b).sign()


def to_float(a: RingElem, precision: int = 53):
    """Embed ``a`` at lambda_q; a Python float for precision <= 53, else an mpf."""
    if not any(a.coeffs[1:]):
        v = a.coeffs[0]
        if precision <= 53:
            return float(v)
    bits = max((abs(c).bit_length() for c in a.coeffs), default=0)
    mp = mpmath.MPContext()
    mp.prec = precision + bits + 64
    lam = 2 * mp.cos(mp.pi / a.ctx.q)
    acc = mp.mpf(0)
    for c in reversed(a.coeffs):
        acc = acc * lam + c
    if precision <= 53:
        return float(acc)
    mp.prec = precision
    return +acc


def chebyshev_s(ctx: RingContext, k: int) -> RingElem:
    """s(k) = sin(k pi/q)/sin(pi/q) via s(0)=0, s(1)=1, s(k+1) = lambda s(k) - s(k-1)."""
    if k < 0:
        return -chebyshev_s(ctx, -k)
    cache = ctx._s_cache
    if k in cache:
        return cache[k]
    top = max(cache) if cache else -1
    if top < 1:
        cache[0] = ctx.zero
        cache[1] = ctx.one
        top = 1
    lam = ctx.lam
    for j in range(top, k):
        cache[j + 1] = lam * cache[j] - cache[j - 1]
    return cache[k]


def field_coordinates(num: RingElem, den: RingElem) -> tuple:
    """Rational coordinates of num/den in Q(lambda); den must be non-zero.

    Solves (multiplication-by-den matrix) * x = num over the rationals.
    """
    ctx = num.ctx
    d = ctx.d
    cols = []
    basis = [ctx.elem([0] * i + [1]) for i in range(d)] if d > 1 else [ctx.one]
    for e in basis:
        cols.append((den * e).coeffs)
    # augmented matrix rows
    m = [[Fraction(cols[j][i]) for j in range(d)] + [Fraction(num.coeffs[i])] for i in range(d)]
    for col in range(d):
        piv = next((r for r in range(col, d) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("denominator is zero")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        row = [x / pv for x in m[col]]
        m[col] = row
        for r in range(d):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], row)]
    return tuple(m[i][d] for i in range(d))
