"""Batch command line: ``ncphi4 <subcommand> [options]``.

Exit codes: 0 ok, 2 input error, 3 fit or verification failure. Failures
print one line ``ncphi4: error: <kind>: <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import amplitudes as amp
from . import model, ribbon, rg_flow
from .config import ConfigError, RunConfig
from .errors import DomainError, FitRejectedError, QuadratureError, StructuralError

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 2, 3


class InputError(Exception):
    pass


class VerificationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_INPUT, "usage", message)


def _fail(code, kind, message):
    message = " ".join(str(message).split())
    print(f"ncphi4: error: {kind}: {message}", file=sys.stderr)
    sys.exit(code)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _range(text: str, name: str):
    try:
        lo, hi, count = text.split(":")
        lo, hi = float(lo), float(hi)
        count = int(count)
    except ValueError:
        raise InputError(f"{name} must look like MIN:MAX:COUNT, got {text!r}") from None
    if not (0 < lo < hi) or count < 1:
        raise InputError(f"{name} needs 0 < MIN < MAX and COUNT >= 1, got {text!r}")
    return lo, hi, count


# ---- output plumbing -------------------------------------------------------

class Output:
    """Collects named tables/documents and writes them to a directory or stdout, in order."""

    def __init__(self, out_dir: Path | None, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt

    def table(self, name, header, rows, trailer: dict | None = None):
        if self.fmt == "json":
            doc = {"columns": list(header), "rows": [[_json_value(v) for v in r] for r in rows]}
            if trailer:
                doc.update({k: _json_value(v) for k, v in trailer.items()})
            self.document(name, doc)
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        if trailer and self.out_dir is None:
            buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in trailer.items()) + "\n")
        self._emit(f"{name}.csv", buf.getvalue())
        if trailer and self.out_dir is not None:
            self.document(f"{name}_summary", {k: _json_value(v) for k, v in trailer.items()})

    def document(self, name, doc):
        self._emit(f"{name}.json", json.dumps(doc, indent=2, allow_nan=False) + "\n")

    def text(self, name, line):
        self._emit(f"{name}.txt", line + "\n")

    def _emit(self, filename, content):
        if self.out_dir is None:
            sys.stdout.write(content)
        else:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / filename).write_text(content)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


# ---- subcommands -----------------------------------------------------------

def cmd_decompose(cfg: RunConfig, args, out: Output) -> int:
    params = cfg.params
    if args.random:
        # random directions, |p|^2 log-uniform over [1e-2, 1e2] m^2
        rng = np.random.default_rng(args.seed)
        direction = rng.normal(size=(args.random, 4))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        p2 = np.sort(params.m2 * 10.0 ** rng.uniform(-2, 2, args.random))
        p = direction * np.sqrt(p2)[:, None]
    else:
        lo, hi, count = _range(args.p2, "--p2")
        p = np.zeros((count, 4))
        p[:, 0] = np.sqrt(np.geomspace(lo, hi, count))
    p2 = np.sum(p * p, axis=1)
    c = model.propagator(params, p)
    comm, corr = model.decompose_propagator(params, p)
    residual = np.abs(c - (comm + corr)) / c
    rows = list(zip(p2, c, comm, corr, residual))
    out.table("decompose", ("p2", "C", "commutative_part", "nc_correction", "identity_residual"), rows,
              trailer={"max_identity_residual": float(residual.max())})
    if residual.max() >= 1e-12:
        raise VerificationFailure(f"decomposition identity residual {residual.max():.3e} >= 1e-12")
    return EXIT_OK


def cmd_slice(cfg: RunConfig, args, out: Output) -> int:
    params, family = cfg.params, cfg.slices()
    lo, hi, count = _range(args.p2, "--p2")
    p2_values = np.geomspace(lo, hi, count)
    rows = []
    sample = []
    for p2 in p2_values:
        p = np.array([math.sqrt(p2), 0.0, 0.0, 0.0])
        sample.append(p)
        total = 0.0
        c = model.propagator(params, p)
        for i in range(family.i_max + 1):
            ci = model.slice(params, family, i, p)
            total += ci
            rows.append((p2, i, ci, total, c))
    bound = model.verify_slice_bound(params, family, sample)
    out.table("slice", ("p2", "i", "C_i", "partial_sum", "C"), rows,
              trailer={"K": bound.K, "c": bound.c, "holds": bound.holds, "M": family.M})
    if not bound.holds:
        raise VerificationFailure("slice bound search failed")
    return EXIT_OK


def _load_graph(source: str) -> ribbon.RibbonGraph:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        graphs = ribbon.builtin_graphs()
        if name not in graphs:
            raise InputError(f"unknown builtin graph {name!r}; choose from {sorted(graphs)}")
        return graphs[name]
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise InputError(f"cannot read graph file {source}: {exc.strerror}") from None
    return ribbon.parse_graph(text, name=Path(source).stem)


def classify_line(graph: ribbon.RibbonGraph) -> str:
    gc = ribbon.classify(graph)
    return f"n={graph.n} L={graph.L} N={graph.N} F={gc.F} g={gc.g} B={gc.B} {gc.kind.value}"


def cmd_classify(cfg: RunConfig, args, out: Output) -> int:
    graph = _load_graph(args.graph)
    line = classify_line(graph)
    if out.out_dir is None:
        print(line)
    else:
        out.text(f"classify_{graph.name or 'graph'}", line)
    return EXIT_OK


def _amplitude_rows(cfg: RunConfig, ident: amp.IntegrandId, p_abs: float | None):
    params = cfg.params
    grid = cfg.grid()
    theta = model.ThetaMatrix.canonical(params.theta)
    if p_abs is None:
        p_abs = model.renormalization_point(params) or math.sqrt(params.m2)
    p = np.array([p_abs, 0.0, 0.0, 0.0])
    results = []
    for cut in grid:
        if ident is amp.IntegrandId.S1_ZERO:
            results.append(amp.s1_zero(params, cut))
        elif ident is amp.IntegrandId.S1_P:
            results.append(amp.s1_p(params, theta, p, cut))
        elif ident is amp.IntegrandId.S2:
            results.append(amp.s2(params, cut))
        elif ident is amp.IntegrandId.NC_TADPOLE:
            results.append(amp.nc_tadpole_correction(params, cut))
        else:
            first, second = amp.nc_bubble_corrections(params, cut)
            results.append(first if ident is amp.IntegrandId.NC_BUBBLE_1 else second)
    return results


def cmd_amplitude(cfg: RunConfig, args, out: Output) -> int:
    try:
        ident = amp.IntegrandId(args.id)
    except ValueError:
        raise InputError(f"unknown integrand id {args.id!r}") from None
    results = _amplitude_rows(cfg, ident, args.p)
    out.table(f"amplitude_{ident.value}", amp.CSV_HEADER, [r.row() for r in results])
    return EXIT_OK


def cmd_powercount(cfg: RunConfig, args, out: Output) -> int:
    verdicts = ribbon.power_count_sweep(args.b_max, args.n_max)
    rows = []
    for v in verdicts:
        N = 2 * (v.L - 2 * v.b + 2)
        rows.append((v.b, N, v.L, v.degree, v.nc_degree, v.nc_convergent))
    all_ok = all(v.nc_convergent for v in verdicts)
    out.table("powercount", ("b", "N", "L", "degree", "nc_degree", "nc_convergent"), rows,
              trailer={"all_nc_convergent": all_ok})
    if not all_ok:
        raise VerificationFailure("an NC correction was found power-counting divergent")
    return EXIT_OK


def _report_or_fail(cfg: RunConfig, args):
    return rg_flow.beta_report(cfg.params, cfg.grid(), workers=args.workers)


def cmd_betafn(cfg: RunConfig, args, out: Output) -> int:
    report = _report_or_fail(cfg, args)
    doc = _json_value(report.to_json_dict())
    if out.fmt == "csv" and out.out_dir is None:
        out.table("samples", report.SAMPLE_COLUMNS, report.samples)
        return EXIT_OK
    out.document("betafn", doc)
    if out.out_dir is not None:
        Output(out.out_dir, "csv").table("samples", report.SAMPLE_COLUMNS, report.samples)
    return EXIT_OK


def cmd_report(cfg: RunConfig, args, out: Output) -> int:
    out_dir = out.out_dir or Path("report")
    status = {}
    worst = EXIT_OK

    def run(name, fn, sub_args):
        nonlocal worst
        try:
            fn(cfg, sub_args, Output(out_dir, out.fmt))
            status[name] = "ok"
        except VerificationFailure as exc:
            status[name] = f"failed: {exc}"
            worst = max(worst, EXIT_VERIFY)
        except FitRejectedError as exc:
            status[name] = f"failed: {exc}"
            worst = max(worst, EXIT_VERIFY)

    base = vars(args)
    ns = lambda **kw: argparse.Namespace(**{**base, **kw})  # noqa: E731
    run("decompose", cmd_decompose, ns(random=10000, p2=DEFAULT_P2))
    run("slice", cmd_slice, ns(p2=DEFAULT_SLICE_P2))
    for name in ribbon.builtin_graphs():
        run(f"classify_{name}", cmd_classify, ns(graph=f"builtin:{name}"))
    for ident in amp.IntegrandId:
        run(f"amplitude_{ident.value}", cmd_amplitude, ns(id=ident.value, p=None))
    run("powercount", cmd_powercount, ns(b_max=50, n_max=20))
    run("betafn", cmd_betafn, ns())
    Output(out_dir, "json").document("summary", {"status": status, "seed": args.seed})
    return worst


DEFAULT_P2 = "1e-3:1e3:61"
DEFAULT_SLICE_P2 = "1e-2:1e2:9"

COMMANDS = {
    "decompose": cmd_decompose,
    "slice": cmd_slice,
    "classify": cmd_classify,
    "amplitude": cmd_amplitude,
    "powercount": cmd_powercount,
    "betafn": cmd_betafn,
    "report": cmd_report,
}


def _global_options(parser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", metavar="PATH", default=default(None), help="key = value config file")
    parser.add_argument("--out", metavar="DIR", default=default(None), help="write outputs into DIR")
    parser.add_argument("--format", choices=("csv", "json"), default=default("csv"))
    parser.add_argument("--grid", metavar="MIN:MAX:COUNT", default=default(None),
                        help="log-spaced cutoff grid (overrides the config)")
    parser.add_argument("--seed", type=int, default=default(0), help="seed for randomized sweeps")
    parser.add_argument("--workers", type=int, default=default(None), help="threads for grid evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncphi4", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_options(p, suppress=True)
        return p

    p = add("decompose", "propagator = commutative part + NC correction on a p^2 grid")
    p.add_argument("--p2", default=DEFAULT_P2, metavar="MIN:MAX:COUNT")
    p.add_argument("--random", type=int, default=0, metavar="COUNT",
                   help="use COUNT random momenta (seeded by --seed) instead of the grid")
    p = add("slice", "multiscale slices and the slice bound")
    p.add_argument("--p2", default=DEFAULT_SLICE_P2, metavar="MIN:MAX:COUNT")
    p = add("classify", "genus, faces and broken faces of a ribbon graph")
    p.add_argument("graph", help="graph file, or builtin:T1|T2|T3|bubble")
    p = add("amplitude", "one integrand over the cutoff grid")
    p.add_argument("--id", required=True, choices=[i.value for i in amp.IntegrandId])
    p.add_argument("--p", type=float, default=None, help="|p| for S1_p (default: p_m)")
    p = add("powercount", "power-counting sweep of the NC correction")
    p.add_argument("--b-max", type=int, default=50)
    p.add_argument("--n-max", type=int, default=20)
    add("betafn", "Z, gamma and beta functions as JSON")
    add("report", "run everything and bundle the outputs")
    return parser


def _config(args) -> RunConfig:
    extra = dict(output_dir=Path(args.out) if args.out else None, format=args.format)
    cfg = RunConfig.load(args.config, **extra) if args.config else RunConfig.from_mapping({}, **extra)
    if args.grid:
        cfg.grid_min, cfg.grid_max, cfg.grid_count = _range(args.grid, "--grid")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = Output(cfg.output_dir, cfg.format)
        code = COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        _fail(EXIT_INPUT, "config", exc)
    except (InputError, DomainError, StructuralError) as exc:
        _fail(EXIT_INPUT, "input", exc)
    except FitRejectedError as exc:
        _fail(EXIT_VERIFY, f"fit[{exc.quantity}]", exc)
    except (VerificationFailure, QuadratureError) as exc:
        _fail(EXIT_VERIFY, "verification", exc)
    return code


if __name__ == "__main__":
    sys.exit(main())
