import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heckefarey import fareymap as fm
from heckefarey.algring import ring_context_new
from heckefarey.heckegroup import ProjPoint


def mediant_levels(n):
    """Classical Stern-Brocot levels on [0, 1] by integer mediants."""
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


def as_fraction(p):
    # q = 3: lambda = 1, so every coordinate is an integer
    return Fraction(p.num.coeffs[0], p.den.coeffs[0])


def test_mediant_oracle_q3(ctx3):
    ours = fm.stern_brocot_levels(ctx3, 6)
    for k, (got, want) in enumerate(zip(ours, mediant_levels(6))):
        assert [as_fraction(p) for p in got] == sorted(want), k


def test_level3_q3(ctx3):
    assert [as_fraction(p) for p in fm.stern_brocot_level(ctx3, 3)] == [
        Fraction(1, 4), Fraction(2, 5), Fraction(3, 5), Fraction(3, 4)]


def test_q5_levels(ctx5):
    lam, one = ctx5.lam, ctx5.one
    bps = fm.breakpoints(ctx5)
    assert bps == [ProjPoint(one, lam + one), ProjPoint(one, lam), ProjPoint(lam, 2 * one)]
    lvl1 = fm.inverse_images(ctx5, [ProjPoint.of(ctx5, 0), ProjPoint.of(ctx5, 1)], 1)
    assert lvl1 == {ProjPoint.of(ctx5, 0), ProjPoint.of(ctx5, 1), *bps}
    lvl2 = set(fm.stern_brocot_level(ctx5, 2))
    for p in (ProjPoint(one, 2 * lam + one), ProjPoint.of(ctx5, 1, 2),
              ProjPoint(2 * lam + one, 3 * lam + one), ProjPoint(2 * lam + 2, 3 * lam + one)):
        assert p in lvl2


@pytest.mark.parametrize("q", [3, 5, 7, 9, 11])
def test_tiling(q):
    ctx = ring_context_new(q)
    parts = fm.branch_partition(ctx)
    assert len(parts) == q - 1
    assert parts[0].domain.left == ProjPoint.of(ctx, 0)
    assert parts[-1].domain.right == ProjPoint.of(ctx, 1)


def test_leftmost_branch_q7(ctx7):
    left = fm.branch_partition(ctx7)[0]
    assert left.domain.right == ProjPoint(ctx7.one, ctx7.lam + ctx7.one)


def test_map_values(ctx3, ctx5):
    lam = ctx5.lambda_float
    assert fm.farey_apply_float(ctx5, 0.5) == pytest.approx(2 - lam, abs=1e-15)
    assert fm.farey_apply_float(ctx5, 0.0) == 0.0
    assert fm.farey_apply_float(ctx5, 1.0) == 0.0
    assert fm.farey_apply_exact(ctx3, ProjPoint.of(ctx3, 1, 3)) == ProjPoint.of(ctx3, 1, 2)
    assert fm.farey_apply_exact(ctx5, ProjPoint.of(ctx5, 1)) == ProjPoint.of(ctx5, 0)
    with pytest.raises(ValueError):
        fm.farey_apply_float(ctx5, 1.5)


def test_breakpoints_map_to_endpoints(ctx):
    # each breakpoint is sent to 0 or 1; left branch convention
    for p in fm.breakpoints(ctx):
        img = fm.farey_apply_exact(ctx, p)
        assert img in (ProjPoint.of(ctx, 0), ProjPoint.of(ctx, 1))


def test_exact_and_float_agree(ctx):
    for k in range(1, 40):
        p = ProjPoint.of(ctx, k, 41)
        assert fm.farey_apply_exact(ctx, p).to_float() == pytest.approx(
            fm.farey_apply_float(ctx, k / 41), abs=1e-12)


def test_orbit_shape(ctx5):
    o = fm.farey_orbit(ctx5, 0.3, 5)
    assert len(o) == 6 and o[0] == 0.3
    assert all(0 <= v <= 1 for v in o)


def test_sweep_out(ctx5, ctx7, ctx3):
    A = fm.sweep_out_union(ctx5, 1)
    assert A.left == ProjPoint(ctx5.one, ctx5.lam + ctx5.one) and not A.left_closed
    assert fm.sweep_out_union(ctx5, 3).left.to_float() == pytest.approx(0.170820393, abs=1e-9)
    assert fm.sweep_out_union(ctx3, 10).left == ProjPoint.of(ctx3, 1, 11)
    for c in (ctx5, ctx7):
        for n in range(1, 9):
            fm.sweep_out_union(c, n, audit=True)
    assert fm.sweep_closed_form_check(ctx5, 2000) == 0


def test_y_of_compact(ctx5, ctx3):
    one = ProjPoint.of(ctx5, 1)
    assert fm.y_of_compact(ctx5, fm.ExactInterval(ProjPoint.of(ctx5, 1, 2), one))[0] == 0
    N, Y = fm.y_of_compact(ctx5, fm.ExactInterval(ProjPoint.of(ctx5, 1, 5), ProjPoint.of(ctx5, 3, 10)))
    assert N == 2 and Y.left.to_float() == pytest.approx(1 / (3 * ctx5.lambda_float + 1))
    C3 = fm.ExactInterval(ProjPoint.of(ctx3, 1, 11), ProjPoint.of(ctx3, 1))
    assert fm.y_of_compact(ctx3, C3)[0] == 10
    with pytest.raises(ValueError):
        fm.y_of_compact(ctx5, fm.ExactInterval(ProjPoint.of(ctx5, 0), one))


def test_return_times(ctx5):
    A = fm.sweep_out_union(ctx5, 1)
    assert fm.first_return_time(ctx5, 0.9, A) >= 2
    lam = ctx5.lambda_float
    for n in (2, 5, 9):
        x = 1 / (n * lam + 1) - 1e-9
        assert fm.first_hitting_time(ctx5, x, A) >= n
    with pytest.raises(ValueError):
        fm.first_return_time(ctx5, 0.1, A)
    assert fm.first_hitting_time(ctx5, 0.0, A, cap=50) == fm.NEVER


def test_return_times_array_matches_scalar(ctx5):
    A = fm.sweep_out_union(ctx5, 1)
    lo = A.left.to_float()
    xs = np.linspace(0.4, 0.99, 50)
    arr = fm.return_times_array(ctx5, xs, lo, 200)
    for x, t in zip(xs, arr):
        assert t == fm.first_hitting_time(ctx5, float(x), A, cap=200)


def test_afn_diagnostics(ctx):
    rep = fm.expansion_report(ctx)
    for row in rep["branches"]:
        assert row["min_abs_derivative"] >= row["bound"] - 1e-12
    worst, bound = fm.adler_report(ctx)
    assert worst <= bound
    fixed = fm.indifferent_fixed_points(ctx)
    assert [p for _, p in fixed] == [ProjPoint.of(ctx, 0)]
    assert fm.max_cylinder_diameter(ctx, 6) < fm.max_cylinder_diameter(ctx, 2)


CTX5 = ring_context_new(5)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_inverse_branches_return(x):
    # F(p.x) = x for every letter p
    for y in fm.apply_letters_float(CTX5, x):
        if 1e-9 < y < 1 - 1e-9:
            assert fm.farey_apply_float(CTX5, y) == pytest.approx(x, abs=1e-9)
