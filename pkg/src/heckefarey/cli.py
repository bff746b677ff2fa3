"""Command-line entry point: ``heckefarey <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import equidist, fareymap, operators
from .algring import ring_context_new
from .errors import CapExceeded, PrecisionExhausted
from .heckegroup import DEFAULT_CAP, parse_word
from .verify import run_suite

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_EXHAUSTED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15g}"
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.15g}")
    if isinstance(x, np.integer):
        return int(x)
    return x


def render(header, rows, kind: str, extra: dict | None = None) -> str:
    if kind == "json":
        doc = dict(extra or {})
        doc["columns"] = header
        doc["rows"] = [{h: _json_value(v) for h, v in zip(header, r)} for r in rows]
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    folder = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return a, b


def _coeffs(e) -> str:
    return ";".join(str(c) for c in e.coeffs)


# -- subcommands --------------------------------------------------------------

def cmd_minpoly(args, ctx):
    coeffs = list(ctx.minpoly)
    if args.format == "json":
        return json.dumps({"q": ctx.q, "minpoly": coeffs}) + "\n"
    return ",".join(str(c) for c in coeffs) + "\n"


def cmd_stern_brocot(args, ctx):
    pts = fareymap.stern_brocot_level(ctx, args.level, cap=args.cap)
    header = ["level", "index", "num_coeffs", "den_coeffs", "float_value"]
    if args.format == "json":
        rows = [[args.level, i, list(p.num.coeffs), list(p.den.coeffs), p.to_float()]
                for i, p in enumerate(pts)]
    else:
        rows = [[args.level, i, _coeffs(p.num), _coeffs(p.den), p.to_float()]
                for i, p in enumerate(pts)]
    return render(header, rows, args.format, {"q": ctx.q})


def cmd_orbit(args, ctx):
    orbit = fareymap.farey_orbit(ctx, args.x, args.n)
    if args.format == "json":
        return render(["step", "x"], list(enumerate(orbit)), "json", {"q": ctx.q})
    return "".join(fmt(float(v)) + "\n" for v in orbit)


def cmd_preimage(args, ctx):
    if args.method == "words":
        est, err = equidist.preimage_lebesgue_words(ctx, args.n, args.alpha, args.beta, args.cap), 0.0
    else:
        est, err = equidist.preimage_lebesgue_montecarlo(ctx, args.n, args.alpha, args.beta,
                                                         args.samples, args.seed)
    header = ["q", "n", "alpha", "beta", "method", "estimate", "stderr"]
    return render(header, [[ctx.q, args.n, args.alpha, args.beta, args.method, est, err]], args.format)


def cmd_comb(args, ctx):
    comb = equidist.dirac_comb(ctx, args.x, args.n, with_log_factor=not args.no_log, cap=args.cap)
    if args.cdf_grid:
        ys = np.linspace(0.0, 1.0, args.cdf_grid + 1)
        rows = [[float(y), comb.cdf(float(y))] for y in ys]
        return render(["y", "cdf"], rows, args.format, {"q": ctx.q, "n": args.n, "x": args.x})
    order = np.argsort(comb.locations, kind="stable")
    rows = [[float(comb.locations[i]), float(comb.weights[i])] for i in order]
    return render(["location", "weight"], rows, args.format, {"q": ctx.q, "n": args.n, "x": args.x})


def cmd_cusp_comb(args, ctx):
    word = parse_word(args.base_word) if args.base_word else ()
    base = equidist.ReducedFraction.from_word(ctx, word)
    cc = equidist.cusp_comb(ctx, base, args.n, with_log_factor=not args.no_log, cap=args.cap)
    header = ["r_coeffs", "s_coeffs", "float_value", "weight", "multiplicity"]
    rows = []
    for f, w in zip(cc.fractions, cc.comb.weights):
        r = list(f.r.coeffs) if args.format == "json" else _coeffs(f.r)
        s = list(f.s.coeffs) if args.format == "json" else _coeffs(f.s)
        rows.append([r, s, f.value(), float(w), cc.multiplicity[f]])
    extra = {"q": ctx.q, "n": args.n, "count": cc.count, "words": cc.words}
    return render(header, rows, args.format, extra)


def cmd_tail(args, ctx):
    header = ["n", "exact", "mc_estimate", "stderr", "samples", "censored"]
    if args.samples:
        rep = equidist.tail_montecarlo(ctx, args.N0, args.n_max, args.samples, args.seed)
        rows = [[r["n"], r["exact"], r["mc"], r["stderr"], args.samples, rep.censored] for r in rep.rows]
    else:
        rows = [[n, equidist.tail_exact(ctx, args.N0, n), "", "", 0, 0] for n in range(1, args.n_max + 1)]
    y_left = 1.0 / ((args.N0 + 1) * ctx.lambda_float + 1.0)
    return render(header, rows, args.format, {"q": ctx.q, "N": args.N0, "Y": [y_left, 1.0]})


def cmd_mixing(args, ctx):
    table = equidist.mixing_table(ctx, args.u, args.v, args.n_max, args.cap)
    rows = [[r["n"], r["statistic"], r["limit"]] for r in table]
    return render(["n", "statistic", "limit"], rows, args.format, {"q": ctx.q})


def cmd_pf(args, ctx):
    f = operators.ONE if args.f == "one" else operators.INV_X
    val = operators.pf_iterate_pointwise(ctx, f, args.x, args.n, args.cap)
    if args.format == "json":
        return json.dumps({"q": ctx.q, "n": args.n, "x": args.x, "f": args.f, "value": _json_value(val)}) + "\n"
    return fmt(val) + "\n"


def cmd_ulam(args, ctx):
    U = operators.ulam_build(ctx, args.bins)
    v = operators.ulam_iterate(U, np.ones(args.bins), args.iters)
    e = U.edges
    rows = [[float(e[i]), float(e[i + 1]), float(v[i])] for i in range(args.bins)]
    return render(["bin_left", "bin_right", "density"], rows, args.format, {"q": ctx.q})


def cmd_verify(args, ctx):
    outcomes = run_suite(ctx, args.max_n)
    if args.format == "json":
        text = json.dumps({"q": ctx.q, "max_n": args.max_n,
                           "results": [{"name": o.name, "passed": o.passed, "detail": o.detail}
                                       for o in outcomes]}, indent=1) + "\n"
    else:
        text = "".join(o.line() + "\n" for o in outcomes)
        failed = sum(not o.passed for o in outcomes)
        text += f"{len(outcomes) - failed}/{len(outcomes)} invariants passed\n"
    return text, all(o.passed for o in outcomes)


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--q", type=int, required=True)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", default=None)
    common.add_argument("--cap", type=int, default=DEFAULT_CAP)
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="heckefarey", description="Generalized Farey maps of Hecke triangle groups")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sub.add_parser("minpoly", parents=[common])
    s = sub.add_parser("stern-brocot", parents=[common])
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--exact", action="store_true", help="accepted; points are always exact")
    s = sub.add_parser("orbit", parents=[common])
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s = sub.add_parser("preimage", parents=[common])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--method", choices=["words", "mc"], default="words")
    s.add_argument("--samples", type=int, default=100_000)
    s = sub.add_parser("comb", parents=[common])
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--cdf-grid", type=int, default=0)
    s.add_argument("--no-log", action="store_true")
    s = sub.add_parser("cusp-comb", parents=[common])
    s.add_argument("--base-word", default="")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--no-log", action="store_true")
    s = sub.add_parser("tail", parents=[common])
    s.add_argument("--N0", type=int, default=0)
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--samples", type=int, default=0)
    s = sub.add_parser("mixing", parents=[common])
    s.add_argument("--u", type=_pair, required=True)
    s.add_argument("--v", type=_pair, required=True)
    s.add_argument("--n-max", type=int, required=True)
    s = sub.add_parser("pf", parents=[common])
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--f", choices=["one", "invx"], default="one")
    s = sub.add_parser("ulam", parents=[common])
    s.add_argument("--bins", type=int, required=True)
    s.add_argument("--iters", type=int, default=1)
    s = sub.add_parser("verify", parents=[common])
    s.add_argument("--max-n", type=int, default=5)
    return p


COMMANDS = {
    "minpoly": cmd_minpoly, "stern-brocot": cmd_stern_brocot, "orbit": cmd_orbit,
    "preimage": cmd_preimage, "comb": cmd_comb, "cusp-comb": cmd_cusp_comb, "tail": cmd_tail,
    "mixing": cmd_mixing, "pf": cmd_pf, "ulam": cmd_ulam, "verify": cmd_verify,
}


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.cap < 1:
            raise UsageError("--cap must be positive")
        ctx = ring_context_new(args.q)
        result = COMMANDS[args.cmd](args, ctx)
        ok = True
        if isinstance(result, tuple):
            result, ok = result
        emit(result, args.out)
        return EXIT_OK if ok else EXIT_VERIFY
    except (CapExceeded, PrecisionExhausted) as exc:
        print(f"heckefarey: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except (UsageError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
