"""Acceptance criteria 1-10, one pass/fail line each (also in the terminal summary)."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from heckefarey import equidist as eq, fareymap as fm, heckegroup as hg, operators as op
from heckefarey.algring import chebyshev_s, chebyshev_u_tilde, poly_divmod_monic, ring_context_new
from heckefarey.heckegroup import ProjPoint

SEED = 42


class Criterion:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.failures = []
        self.notes = []

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc_type is not None:
            self.failures.append(f"raised {exc_type.__name__}: {exc}")
        self.check(elapsed < self.budget, f"took {elapsed:.1f}s, budget {self.budget}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures or self.notes)
        line = f"[{status}] criterion {self.number:>2} {self.title} ({elapsed:.2f}s / {self.budget}s) {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert not self.failures, line
        return False


def mediant_levels(n):
    seq = [Fraction(0), Fraction(1)]
    levels = [list(seq)]
    for _ in range(n):
        new, merged = [], [seq[0]]
        for a, b in zip(seq, seq[1:]):
            m = Fraction(a.numerator + b.numerator, a.denominator + b.denominator)
            new.append(m)
            merged += [m, b]
        seq = merged
        levels.append(new)
    return levels


def test_criterion_01_exact_algebra():
    with Criterion(1, "exact algebra suite", 10) as c:
        for q in (3, 5, 7, 9, 11, 13):
            ctx = ring_context_new(q)
            _, rem = poly_divmod_monic(chebyshev_u_tilde(q - 1), list(ctx.minpoly))
            c.check(not any(rem), f"q={q}: minpoly does not divide")
            c.check(chebyshev_s(ctx, q).is_zero(), f"q={q}: s(q) != 0")
            c.check(chebyshev_s(ctx, q - 1) == ctx.one, f"q={q}: s(q-1) != 1")
            _, _, U, Q = hg.generators(ctx)
            c.check((U ** q).is_identity(), f"q={q}: U^q != id")
            for k in range(2 * q + 1):
                c.check(Q * hg.branch_element(ctx, k) * Q == hg.branch_element(ctx, q - k),
                        f"q={q}: Q g_{k} Q != g_{q - k}")
        c.note("q in {3,5,7,9,11,13}, k in 0..2q")


def test_criterion_02_farey_structure():
    with Criterion(2, "Farey structure", 10) as c:
        ctx = ring_context_new(5)
        one, lam = ctx.one, ctx.lam
        want = [ProjPoint(one, lam + one), ProjPoint(one, lam), ProjPoint(lam, 2 * one)]
        c.check(fm.breakpoints(ctx) == want, "q=5 breakpoints differ")
        for q in (3, 5, 7, 9):
            fm._PARTITIONS.pop(q, None)  # force a fresh exact tiling check
            c.check(len(fm.branch_partition(ring_context_new(q))) == q - 1, f"q={q} tiling")
        c.note("breakpoints 1/(l+1), 1/l, l/2 exact; tiling q=3,5,7,9")


def test_criterion_03_stern_brocot():
    with Criterion(3, "Stern-Brocot oracle", 30) as c:
        ctx = ring_context_new(3)
        ours = fm.stern_brocot_levels(ctx, 6)
        for k, (got, want) in enumerate(zip(ours, mediant_levels(6))):
            vals = [Fraction(p.num.coeffs[0], p.den.coeffs[0]) for p in got]
            c.check(vals == sorted(want), f"q=3 level {k} differs from mediant tree")
        ctx5 = ring_context_new(5)
        one, lam = ctx5.one, ctx5.lam
        upto2 = {p for lvl in fm.stern_brocot_levels(ctx5, 2) for p in lvl}
        for p in (ProjPoint(one, 2 * lam + one), ProjPoint.of(ctx5, 1, 2),
                  ProjPoint(2 * lam + one, 3 * lam + one), ProjPoint(2 * lam + 2, 3 * lam + one)):
            c.check(p in upto2, f"q=5 missing {p}")
        c.note("q=3 levels 0-6 match; q=5 four labelled values present")


def test_criterion_04_sweep_out():
    with Criterion(4, "sweep-out identity", 30) as c:
        for q in (5, 7):
            ctx = ring_context_new(q)
            for n in range(1, 9):
                try:
                    fm.sweep_out_union(ctx, n, audit=True)
                except AssertionError as exc:
                    c.check(False, f"q={q} n={n}: {exc}")
            bad = fm.sweep_closed_form_check(ctx, 10**6)
            c.check(bad == 0, f"q={q}: closed form fails at n={bad}")
        c.note("audit n<=8 and endpoint arithmetic n<=1e6 for q=5,7")


def test_criterion_05_operator_identities():
    with Criterion(5, "operator identities", 60) as c:
        worst_eig = worst_tr = worst_pf = 0.0
        for q in (3, 5, 7):
            ctx = ring_context_new(q)
            worst_eig = max(worst_eig, op.eigenfunction_residual(ctx, 1000))
            for x in np.linspace(0.001, 1.0, 1000):
                worst_tr = max(worst_tr, abs(op.transfer_apply(ctx, lambda y: 1.0, x) - 1.0))
            for n in range(1, 7):
                for x in (0.05, 0.5, 1.0):
                    a = op.pf_iterate_pointwise(ctx, op.ONE, x, n)
                    b = op.pf_iterate_recursive(ctx, op.ONE, x, n)
                    worst_pf = max(worst_pf, abs(a - b))
        c.check(worst_eig <= 1e-10, f"eigen residual {worst_eig:.2e}")
        c.check(worst_tr <= 1e-12, f"transfer residual {worst_tr:.2e}")
        c.check(worst_pf <= 1e-10, f"word-sum vs recursion {worst_pf:.2e}")
        c.note(f"eig {worst_eig:.1e}, F^1 {worst_tr:.1e}, P^n paths {worst_pf:.1e}")


def test_criterion_06_tails():
    with Criterion(6, "tail probabilities", 300) as c:
        worst = 0.0
        for q in (3, 5):
            ctx = ring_context_new(q)
            for n in range(1, 7):
                worst = max(worst, abs(eq.tail_bruteforce(ctx, n) - eq.tail_exact(ctx, 0, n)))
        c.check(worst <= 1e-10, f"brute force gap {worst:.2e}")
        ctx = ring_context_new(5)
        rep = eq.tail_montecarlo(ctx, 0, 20, 10**6, seed=SEED)
        z = max(abs(r["mc"] - r["exact"]) / r["stderr"] for r in rep.rows)
        c.check(z <= 3.0, f"MC survival off by {z:.2f} sigma")
        scaled = 1e4 * eq.tail_exact(ctx, 0, 10**4)
        c.check(abs(scaled - 1.0) <= 1e-3, f"n mu(phi>n) = {scaled:.6f}")
        ratio = eq.tail_summation(ctx, 0, 10**6) / math.log(10**6)
        c.check(0.9 <= ratio <= 1.1, f"w(n)/log n = {ratio:.4f}")
        c.note(f"brute {worst:.1e}, MC max {z:.2f} sigma (censored {rep.censored}), "
               f"n*tail {scaled:.6f}, w/log {ratio:.4f}")


def test_criterion_07_preimage_oracles():
    with Criterion(7, "preimage volume oracles", 300) as c:
        worst_z = worst_q = 0.0
        for q in (3, 5, 7):
            ctx = ring_context_new(q)
            mc = eq.montecarlo_levels(ctx, 6, [(0.5, 1.0)], 10**6, seed=SEED)[:, 0]
            for n in range(0, 7):
                w = eq.preimage_lebesgue_words(ctx, n, 0.5, 1.0)
                p = mc[n]
                err = math.sqrt(p * (1 - p) / 10**6)
                worst_z = max(worst_z, abs(p - w) / err)
                quad = op.quadrature_gauss(lambda xs: op.pf_power_one_grid(ctx, n, xs), 0.5, 1.0)
                worst_q = max(worst_q, abs(w - quad))
        c.check(worst_z <= 3.0, f"MC off by {worst_z:.2f} sigma")
        c.check(worst_q <= 1e-8, f"quadrature gap {worst_q:.2e}")
        table = eq.convergence_table(ring_context_new(5), 0.5, 1.0, 12)
        c.check(all(r["leb"] > 0 and math.isfinite(r["scaled"]) for r in table),
                "convergence table not positive/finite")
        print("n, Leb(F^-n[1/2,1]), log(n)*Leb, limit log 2  (q=5)")
        for r in table:
            print(f"{r['n']:2d} {r['leb']:.12f} {r['scaled']:.12f} {r['limit']:.12f}")
        c.note(f"MC max {worst_z:.2f} sigma, quadrature {worst_q:.1e}, "
               f"log(12)*Leb = {table[-1]['scaled']:.4f} (limit not asserted)")


def test_criterion_08_comb_structure():
    with Criterion(8, "comb and cusp structure", 300) as c:
        worst_mass = worst_w = worst_one = 0.0
        for q in (3, 5, 7):
            ctx = ring_context_new(q)
            for n in range(1, 6):
                for x in (0.1, 0.5, 0.9, 1.0):
                    comb = eq.dirac_comb(ctx, x, n, with_log_factor=False)
                    ref = x * op.pf_iterate_pointwise(ctx, op.ONE, x, n)
                    worst_mass = max(worst_mass, abs(comb.total_mass - ref))
            worst_one = max(worst_one, abs(eq.x_equals_one_mass(ctx) - 1.0))
        for q, n_max in ((3, 5), (5, 4)):
            ctx = ring_context_new(q)
            one = eq.ReducedFraction(ctx.one, ctx.one)
            others = [eq.ReducedFraction.from_word(ctx, w) for w in ((0,), (q - 2, 0))]
            for n in range(1, n_max + 1):
                cc = eq.cusp_comb(ctx, one, n, with_log_factor=False)
                c.check(cc.words == (q - 1) ** n and set(cc.multiplicity.values()) == {2}
                        and 2 * cc.count == cc.words, f"q={q} n={n}: no exact 2:1 collapse at 1")
                for base in others:
                    co = eq.cusp_comb(ctx, base, n, with_log_factor=False)
                    c.check(co.count == (q - 1) ** n, f"q={q} n={n}: not a bijection at {base}")
                for base in [one] + others:
                    worst_w = max(worst_w, eq.cusp_weight_identity(ctx, base, n))
        c.check(worst_mass <= 1e-10, f"comb mass gap {worst_mass:.2e}")
        c.check(worst_w <= 1e-10, f"weight identity gap {worst_w:.2e}")
        c.check(worst_one <= 1e-12, f"x=1 mass gap {worst_one:.2e}")
        c.note(f"mass {worst_mass:.1e}, weights {worst_w:.1e}, x=1 {worst_one:.1e}, counts exact")


def test_criterion_09_error_chain():
    with Criterion(9, "distribution-function error chain", 120) as c:
        ctx = ring_context_new(5)
        ys = np.linspace(0.0, 1.0, 101)
        slack = math.inf
        for n in range(3, 9):
            for row in eq.error_chain(ctx, 0.5, 0.1, n, ys):
                c.check(row.holds, f"n={n} y={row.y:.2f}: gap {row.gap:.3e} > bound {row.bound:.3e}")
                slack = min(slack, row.bound - row.gap)
        C = eq.chain_constant_C(0.5)
        c.note(f"C = {C:.6f}, min slack {slack:.3e}")


def test_criterion_10_extremal_bounds():
    with Criterion(10, "order and extremal-derivative bounds", 60) as c:
        worst = -math.inf
        for q in (3, 5, 7):
            ctx = ring_context_new(q)
            bad = hg.order_violations(ctx, 64)
            c.check(not bad, f"q={q}: order property fails at {bad[:3]}")
            for n in range(1, 6):
                e = hg.extremal_derivative_excess(ctx, n)
                worst = max(worst, e)
                c.check(e <= 1e-12, f"q={q} n={n}: |h'| exceeds bound by {e:.2e}")
                c.check(hg.derivative_monotone(ctx, n), f"q={q} n={n}: |h'| not monotone")
        c.note(f"order property exact on 65 points; max excess {worst:.1e}")
