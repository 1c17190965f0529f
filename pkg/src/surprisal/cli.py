"""Command-line front end.

Exit status: 0 success, 2 input/usage error, 3 domain or saturation error.
Results go to standard output unless ``--out`` is given; diagnostics go to
standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .combine import CombinationInput, combine, null_calibration
from .compat import (
    MEASURES,
    GridSpec,
    Hypothesis,
    compatibility_interval,
    curve,
    hypothesis_table,
    likelihood_interval,
    p_from_deviance,
    p_from_mlr,
    p_from_s,
    s_table,
)
from .errors import DomainError, InputError
from .report import (
    DEFAULT_LEVELS,
    PlotSpec,
    Provenance,
    build_report,
    display_round,
    emit_curve_table,
    emit_intervals,
    emit_plot,
    emit_table,
    fmt_sig,
    input_digest,
)
from .study import StudySummary, parse_pvalue_file, parse_study_file, recover_normal_approx

log = logging.getLogger("surprisal")

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN = 0, 2, 3
_MODEL_FLAGS = ("point", "lower", "upper", "level", "scale", "se")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_output(p, formats=("csv", "json", "markdown"), default="csv"):
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("--out", type=Path, help="write results here instead of standard output")
    p.add_argument("--force", action="store_true", help="overwrite existing output files")


def _add_model(p):
    g = p.add_argument_group("study summary")
    g.add_argument("--point", type=float)
    g.add_argument("--lower", type=float)
    g.add_argument("--upper", type=float)
    g.add_argument("--level", type=float, help="interval level, e.g. 0.95")
    g.add_argument("--scale", choices=("ratio", "difference"))
    g.add_argument("--se", type=float, help="standard error on the analysis scale")
    g.add_argument("--label", default="study")
    g.add_argument("--input", type=Path, help="CSV or JSON file of study summaries")
    g.add_argument("--input-format", choices=("csv", "json"))
    g.add_argument("--study", help="label of the study to use from --input")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surprisal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="translate p, S-value, MLR or deviance into each other")
    p.add_argument("--p", type=float, action="append", default=[])
    p.add_argument("--s", type=float, action="append", default=[])
    p.add_argument("--mlr", type=float, action="append", default=[])
    p.add_argument("--deviance", type=float, action="append", default=[])
    p.add_argument("--base", choices=("bits", "nats"), default="bits")
    _add_output(p, ("text", "csv", "json", "markdown"), "text")

    p = sub.add_parser("stable", help="the p / S-value / MLR / deviance translation table")
    p.add_argument("--p", type=float, action="append", default=[])
    p.add_argument("--base", choices=("bits", "nats"), default="bits")
    _add_output(p)

    p = sub.add_parser("table", help="measures for a list of test hypotheses")
    _add_model(p)
    p.add_argument("--hypotheses", help="comma list: 2, <=2, >=2, 0.5:2")
    p.add_argument("--base", choices=("bits", "nats"), default="bits")
    _add_output(p)

    p = sub.add_parser("interval", help="compatibility and likelihood intervals")
    _add_model(p)
    p.add_argument("--levels", type=_float_list, default=list(DEFAULT_LEVELS))
    p.add_argument("--cutoff", type=float, action="append", default=[],
                   help="likelihood-interval MLR cutoff, e.g. 6.83")
    _add_output(p)

    p = sub.add_parser("curve", help="P-value, S-value, likelihood or deviance curve")
    _add_model(p)
    p.add_argument("--measure", choices=MEASURES, default="p")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--count", type=int, default=401)
    p.add_argument("--svg", type=Path, help="also write the plot here")
    p.add_argument("--band-level", type=float, help="shade this compatibility interval")
    _add_output(p)

    p = sub.add_parser("combine", help="combine S-values across independent studies")
    p.add_argument("--p", type=float, action="append", default=[])
    p.add_argument("--s", type=float, action="append", default=[])
    p.add_argument("--base", choices=("bits", "nats"), default="bits")
    p.add_argument("--input", type=Path, help="CSV/JSON file with label,p columns")
    p.add_argument("--input-format", choices=("csv", "json"))
    p.add_argument("--sidedness", choices=("two-sided", "one-sided"), default="two-sided")
    p.add_argument("--calibrate", type=int, metavar="K",
                   help="run a null calibration for K studies instead")
    p.add_argument("--sims", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, ("text", "json"), "text")

    p = sub.add_parser("report", help="full analysis bundle for one study")
    _add_model(p)
    p.add_argument("--hypotheses")
    p.add_argument("--levels", type=_float_list, default=list(DEFAULT_LEVELS))
    p.add_argument("--context", help="e.g. 'HDPS adjustment for confounding'")
    p.add_argument("--svg", type=Path)
    p.add_argument("--measure", choices=MEASURES, default="p")
    _add_output(p, ("markdown", "json"), "markdown")
    return parser


# ---- helpers ----

def _input_format(path: Path, declared: str | None) -> str:
    if declared:
        return declared
    return "json" if path.suffix.lower() == ".json" else "csv"


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _summary(args) -> StudySummary:
    inline = [f for f in _MODEL_FLAGS if getattr(args, f) is not None]
    if args.input is not None:
        if inline:
            raise InputError("give the study either inline or via --input, not both "
                             f"(inline flags: {', '.join('--' + f for f in inline)})")
        studies = parse_study_file(_read(args.input), _input_format(args.input, args.input_format))
        if args.study is not None:
            studies = [s for s in studies if s.label == args.study]
            if not studies:
                raise InputError(f"no study labelled {args.study!r} in {args.input}")
        if len(studies) != 1:
            raise InputError(f"{args.input} holds {len(studies)} studies; choose one with --study")
        return studies[0]
    if args.point is None or args.scale is None:
        raise InputError("need --point and --scale (plus --lower/--upper or --se), or --input")
    if args.lower is None and args.upper is None and args.se is not None:
        return StudySummary.from_se(args.label, args.point, args.se, args.scale,
                                    0.95 if args.level is None else args.level)
    if args.lower is None or args.upper is None:
        raise InputError("need both --lower and --upper")
    summary = StudySummary(args.label, args.point, args.lower, args.upper,
                           0.95 if args.level is None else args.level, args.scale, args.se)
    return summary


def _hypotheses(text: str | None, summary: StudySummary):
    if not text:
        return [Hypothesis.point(summary.scale.null_value), Hypothesis.point(summary.point)]
    return [Hypothesis.parse(t) for t in text.split(",") if t.strip()]


class _Outputs:
    """Collects declared output paths and refuses to clobber files without --force."""

    def __init__(self, args):
        self.force = getattr(args, "force", False)
        paths = [p for p in (getattr(args, "out", None), getattr(args, "svg", None)) if p is not None]
        if len({os.path.abspath(p) for p in paths}) != len(paths):
            raise InputError("--out and --svg must name different files")
        for path in paths:
            if path.exists() and not self.force:
                raise InputError(f"{path} exists; use --force to overwrite")

    def write(self, path: Path | None, data: bytes) -> None:
        if path is None:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
            return
        try:
            path.write_bytes(data)
        except OSError as exc:
            raise InputError(f"cannot write {path}: {exc.strerror}") from None


# ---- subcommands ----

def _cmd_convert(args, out: _Outputs) -> None:
    items = [(f"p = {v:g}", v) for v in args.p]
    items += [(f"s = {v:g} {args.base}", p_from_s(v, args.base)) for v in args.s]
    items += [(f"MLR = {v:g}", p_from_mlr(v)) for v in args.mlr]
    items += [(f"deviance = {v:g}", p_from_deviance(v)) for v in args.deviance]
    if not items:
        raise InputError("give at least one of --p, --s, --mlr, --deviance")
    rows = s_table(items)
    if args.format == "text":
        lines = []
        for r in rows:
            s = display_round(r.s_bits) if args.base == "bits" else f"{r.s_nats:.2f}"
            lines.append(f"{r.label}: p = {fmt_sig(r.p)}, s = {s} {args.base}, "
                         f"MLR = {fmt_sig(r.mlr)}, deviance = {fmt_sig(r.deviance)}")
        out.write(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
        return
    prov = Provenance(input_digest({"convert": [[lab, p] for lab, p in items]}))
    out.write(args.out, emit_table(rows, args.format, base=args.base, provenance=prov))


def _cmd_stable(args, out: _Outputs) -> None:
    rows = s_table() + (s_table(args.p) if args.p else [])
    prov = Provenance(input_digest({"stable": args.p}))
    out.write(args.out, emit_table(rows, args.format, base=args.base, provenance=prov))


def _cmd_table(args, out: _Outputs) -> None:
    summary = _summary(args)
    model = recover_normal_approx(summary)
    rows = hypothesis_table(model, _hypotheses(args.hypotheses, summary))
    prov = Provenance(input_digest(summary))
    out.write(args.out, emit_table(rows, args.format, base=args.base, provenance=prov))


def _cmd_interval(args, out: _Outputs) -> None:
    summary = _summary(args)
    model = recover_normal_approx(summary)
    intervals = [compatibility_interval(model, lv) for lv in args.levels]
    intervals += [likelihood_interval(model, c) for c in args.cutoff]
    if not intervals:
        raise InputError("no interval levels requested")
    out.write(args.out, emit_intervals(intervals, args.format,
                                       provenance=Provenance(input_digest(summary))))


def _grid(args, model) -> GridSpec:
    default = GridSpec.default(model, count=args.count)
    lo = default.lo if args.lo is None else args.lo
    hi = default.hi if args.hi is None else args.hi
    return GridSpec(lo, hi, args.count, model.scale)


def _cmd_curve(args, out: _Outputs) -> None:
    summary = _summary(args)
    model = recover_normal_approx(summary)
    sample = curve(model, _grid(args, model))
    prov = Provenance(input_digest(summary))
    if args.svg is not None:
        band = compatibility_interval(model, args.band_level) if args.band_level else None
        spec = PlotSpec.standard(args.measure, band=band, title=summary.label)
        out.write(args.svg, emit_plot(sample, spec, provenance=prov))
    out.write(args.out, emit_curve_table(sample, args.format, provenance=prov))


def _cmd_combine(args, out: _Outputs) -> None:
    if args.calibrate is not None:
        if args.p or args.s or args.input:
            raise InputError("--calibrate takes no study inputs")
        report = null_calibration(args.calibrate, args.sims, args.seed).as_dict()
        if args.format == "json":
            out.write(args.out, (json.dumps(report, indent=2) + "\n").encode("utf-8"))
        else:
            text = "\n".join(f"{k}: {v}" for k, v in report.items()) + "\n"
            out.write(args.out, text.encode("utf-8"))
        return
    sources = [bool(args.p), bool(args.s), args.input is not None]
    if sum(sources) != 1:
        raise InputError("give studies by exactly one of --p, --s or --input")
    labels: tuple[str, ...] = ()
    if args.p:
        values, unit = args.p, "p"
    elif args.s:
        values, unit = args.s, "s_" + args.base
    else:
        records = parse_pvalue_file(_read(args.input), _input_format(args.input, args.input_format))
        labels = tuple(lab for lab, _ in records)
        values, unit = [p for _, p in records], "p"
    result = combine(CombinationInput(tuple(values), True, unit, args.sidedness, labels))
    if args.format == "json":
        out.write(args.out, (json.dumps(result.as_dict(), indent=2) + "\n").encode("utf-8"))
        return
    text = (
        f"K = {result.k} studies ({result.sidedness} p values, independence assumed)\n"
        f"sum of S-values = {result.sum_s_nats:.6g} nats\n"
        f"statistic = {result.statistic:.6g} on {result.df} df\n"
        f"combined_p = {fmt_sig(result.combined_p)}\n"
        f"combined_s = {display_round(result.combined_s_bits)} bits\n"
    )
    out.write(args.out, text.encode("utf-8"))


def _cmd_report(args, out: _Outputs) -> None:
    summary = _summary(args)
    bundle = build_report(summary, _hypotheses(args.hypotheses, summary), tuple(args.levels),
                          context_label=args.context)
    if args.svg is not None:
        band_level = 0.95 if 0.95 in args.levels else args.levels[0]
        spec = PlotSpec.standard(args.measure, band=compatibility_interval(bundle.model, band_level),
                                 title=summary.label)
        out.write(args.svg, emit_plot(bundle.curve, spec, provenance=Provenance(bundle.digest)))
    data = bundle.to_json() if args.format == "json" else bundle.to_markdown()
    out.write(args.out, data)


_COMMANDS = {
    "convert": _cmd_convert,
    "stable": _cmd_stable,
    "table": _cmd_table,
    "interval": _cmd_interval,
    "curve": _cmd_curve,
    "combine": _cmd_combine,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        out = _Outputs(args)
        _COMMANDS[args.command](args, out)
    except DomainError as exc:
        print(f"surprisal: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InputError as exc:
        print(f"surprisal: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
