"""Desk-scale invariant suite run by ``heckefarey verify``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import equidist, fareymap, heckegroup as hg, operators
from .algring import RingContext, chebyshev_s, chebyshev_u_tilde, poly_divmod_monic

TOL = 1e-10


@dataclass
class Outcome:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name} ({self.seconds:.3f}s) {self.detail}"


def _minpoly_divides(ctx, max_n):
    _, rem = poly_divmod_monic(chebyshev_u_tilde(ctx.q - 1), list(ctx.minpoly))
    return not any(rem), f"minpoly={list(ctx.minpoly)}"


def _chebyshev_ends(ctx, max_n):
    ok = chebyshev_s(ctx, ctx.q).is_zero() and chebyshev_s(ctx, ctx.q - 1) == ctx.one
    return ok, "s(q)=0, s(q-1)=1"


def _u_order(ctx, max_n):
    _, _, U, _ = hg.generators(ctx)
    return (U ** ctx.q).is_identity(), "U^q = id"


def _q_conjugation(ctx, max_n):
    Q = hg.q_element(ctx)
    bad = [k for k in range(2 * ctx.q + 1)
           if Q * hg.branch_element(ctx, k) * Q != hg.branch_element(ctx, ctx.q - k)]
    return not bad, f"failures at k={bad}" if bad else "Q g_k Q = g_(q-k)"


def _boundary_matching(ctx, max_n):
    Q = hg.q_element(ctx)
    zero, one = hg.ProjPoint.of(ctx, 0), hg.ProjPoint.of(ctx, 1)
    bad = []
    for k in range(2 * ctx.q):
        gk_inv = hg.branch_element(ctx, k).inverse()
        if hg.moebius_apply((Q * hg.branch_element(ctx, k + 1)).inverse(), zero) != hg.moebius_apply(gk_inv, zero):
            bad.append(("0", k))
        if hg.moebius_apply((Q * hg.branch_element(ctx, k)).inverse(), one) != hg.moebius_apply(gk_inv, one):
            bad.append(("1", k))
    return not bad, f"failures {bad}" if bad else "branch endpoints match"


def _positivity(ctx, max_n):
    for n in range(1, max_n + 1):
        for _, M in hg.word_matrix_chunks(ctx, n):
            if np.any(M < 0) or np.any(M[:, 2:] <= 0):
                return False, f"negative entry at n={n}"
    return True, f"n<={max_n}"


def _freeness(ctx, max_n):
    n = min(max_n, 4)
    level = hg.compose_level(ctx, n)
    return len(set(level)) == len(level), f"|W_{n}|={len(level)} distinct"


def _tiling(ctx, max_n):
    branches = fareymap.branch_partition(ctx)
    return len(branches) == ctx.q - 1, f"{len(branches)} branches tile [0,1]"


def _sweep_out(ctx, max_n):
    for n in range(1, max_n + 1):
        fareymap.sweep_out_union(ctx, n, audit=True)
    return True, f"audit n<={max_n}"


def _eigenfunction(ctx, max_n):
    r = operators.eigenfunction_residual(ctx, 1000)
    return r <= TOL, f"residual={r:.3e}"


def _telescoping(ctx, max_n):
    r = max(operators.telescoping_residual(ctx, x) for x in np.linspace(0.05, 1.0, 20))
    return r <= TOL, f"residual={r:.3e}"


def _transfer_one(ctx, max_n):
    r = max(abs(operators.transfer_apply(ctx, lambda y: 1.0, x) - 1.0)
            for x in np.linspace(0.01, 1.0, 100))
    return r <= 1e-12, f"max |F^1 - 1|={r:.3e}"


def _pf_paths(ctx, max_n):
    n = min(max_n, 4 if ctx.q > 7 else 6)
    worst = 0.0
    for k in range(1, n + 1):
        for x in (0.3, 0.7, 1.0):
            a = operators.pf_iterate_pointwise(ctx, operators.ONE, x, k)
            b = operators.pf_iterate_recursive(ctx, operators.ONE, x, k)
            worst = max(worst, abs(a - b))
    return worst <= TOL, f"max gap={worst:.3e}"


def _comb_mass(ctx, max_n):
    worst = 0.0
    for n in range(1, max_n + 1):
        for x in (0.25, 0.5, 1.0):
            comb = equidist.dirac_comb(ctx, x, n, with_log_factor=False)
            worst = max(worst, abs(comb.total_mass - x * operators.pf_iterate_pointwise(ctx, operators.ONE, x, n)))
    return worst <= TOL, f"max gap={worst:.3e}"


def _x_one_mass(ctx, max_n):
    r = abs(equidist.x_equals_one_mass(ctx) - 1.0)
    return r <= 1e-12, f"gap={r:.3e}"


def _cusp_bijection(ctx, max_n):
    n = min(max_n, 4)
    one = equidist.ReducedFraction(ctx.one, ctx.one)
    cc = equidist.cusp_comb(ctx, one, n, with_log_factor=False)
    two_to_one = set(cc.multiplicity.values()) == {2} and 2 * cc.count == cc.words
    other = equidist.ReducedFraction.from_word(ctx, (0,))
    co = equidist.cusp_comb(ctx, other, n, with_log_factor=False)
    bij = co.count == co.words == (ctx.q - 1) ** n
    return two_to_one and bij, f"n={n}: base 1 -> {cc.count}, other -> {co.count}"


def _tail(ctx, max_n):
    n_top = min(max_n, 6 if ctx.q <= 5 else 4)
    worst = max(abs(equidist.tail_bruteforce(ctx, n) - equidist.tail_exact(ctx, 0, n))
                for n in range(1, n_top + 1))
    return worst <= TOL, f"n<={n_top}, max gap={worst:.3e}"


def _order_property(ctx, max_n):
    bad = hg.order_violations(ctx, 64)
    return not bad, f"{len(bad)} violations"


def _extremal(ctx, max_n):
    worst = max(hg.extremal_derivative_excess(ctx, n) for n in range(1, max_n + 1))
    mono = all(hg.derivative_monotone(ctx, n) for n in range(1, max_n + 1))
    return worst <= 1e-12 and mono, f"max excess={worst:.3e}, monotone={mono}"


def _ulam(ctx, max_n):
    U = operators.ulam_build(ctx, 256)
    r = float(np.max(np.abs(U.column_sums() - 1.0)))
    return r <= 1e-12, f"column sum gap={r:.3e}"


def _mu_invariance(ctx, max_n):
    worst = 0.0
    for a, b in ((0.5, 1.0), (0.2, 0.3), (0.7, 0.9)):
        pre = equidist.mu_preimage_intersection(ctx, (a, b), (1e-300, 1.0), 1)
        worst = max(worst, abs(pre - math.log(b / a)))
    return worst <= TOL, f"max gap={worst:.3e}"


SUITE = [
    ("algring.minpoly_divides", _minpoly_divides),
    ("algring.chebyshev_ends", _chebyshev_ends),
    ("heckegroup.u_order", _u_order),
    ("heckegroup.q_conjugation", _q_conjugation),
    ("heckegroup.boundary_matching", _boundary_matching),
    ("heckegroup.positivity", _positivity),
    ("heckegroup.freeness", _freeness),
    ("heckegroup.order_property", _order_property),
    ("heckegroup.extremal_derivative", _extremal),
    ("fareymap.tiling", _tiling),
    ("fareymap.sweep_out", _sweep_out),
    ("operators.eigenfunction", _eigenfunction),
    ("operators.telescoping", _telescoping),
    ("operators.transfer_one", _transfer_one),
    ("operators.pf_paths", _pf_paths),
    ("operators.ulam_columns", _ulam),
    ("equidist.mu_invariance", _mu_invariance),
    ("equidist.comb_mass", _comb_mass),
    ("equidist.x_one_mass", _x_one_mass),
    ("equidist.cusp_bijection", _cusp_bijection),
    ("equidist.tail_bruteforce", _tail),
]


def run_suite(ctx: RingContext, max_n: int = 5) -> list[Outcome]:
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    out = []
    for name, fn in SUITE:
        t = time.perf_counter()
        try:
            ok, detail = fn(ctx, max_n)
        except AssertionError as exc:
            ok, detail = False, f"assertion: {exc}"
        out.append(Outcome(name, bool(ok), detail, time.perf_counter() - t))
    return out
