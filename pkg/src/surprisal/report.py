"""Tables, SVG plots, narrative text and report bundles.

All emitters are deterministic: identical inputs and tool version give
identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from . import __version__
from .compat import (
    MEASURES,
    CompatPoint,
    CurveSample,
    GridSpec,
    Hypothesis,
    IntervalEstimate,
    STableRow,
    compatibility_interval,
    curve as sample_curve,
    display_round,
    hypothesis_table,
    likelihood_interval,
    p_point,
)
from .errors import InputError, ValidationError
from .study import NormalApprox, Scale, StudySummary, recover_normal_approx

TOOL = "surprisal"
TABLE_FORMATS = ("csv", "json", "markdown")
BANNED_WORDS = ("significant", "confidence")


@dataclass(frozen=True)
class Provenance:
    digest: str
    tool: str = TOOL
    version: str = __version__

    @property
    def line(self) -> str:
        return f"{self.tool} {self.version} input-digest {self.digest}"


def input_digest(obj) -> str:
    """SHA-256 of the canonical JSON encoding of ``obj``."""
    if isinstance(obj, StudySummary):
        obj = obj.as_dict()
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def fmt_sig(x: float, digits: int = 3) -> str:
    """Fixed number of significant digits, trailing zeros kept."""
    if math.isinf(x):
        return "inf"
    if x == 0.0:
        return "0." + "0" * (digits - 1)
    return format(x, f"#.{digits}g").rstrip(".")


def _json_number(text: str):
    return None if text == "inf" else float(text)


# ---- tables ----

TABLE_COLUMNS = ("hypothesis", "p", "s_bits", "mlr", "deviance")


def _row_label(row) -> str:
    if isinstance(row, CompatPoint):
        return row.hypothesis.label
    if isinstance(row, STableRow):
        return row.label
    raise InputError(f"cannot tabulate {type(row).__name__}")


def _cells(row, base: str) -> list[str]:
    s_bits = row.s_bits
    s = display_round(s_bits)
    if base == "nats":
        s_nats = row.s_nats
        s = f"{s_nats:.2f}" if s_bits <= 10.0 else str(int(math.floor(s_nats + 0.5)))
    return [_row_label(row), fmt_sig(row.p), s, fmt_sig(row.mlr), fmt_sig(row.deviance)]


def _columns(base: str) -> tuple[str, ...]:
    if base not in ("bits", "nats"):
        raise InputError(f"base must be 'bits' or 'nats', got {base!r}")
    return TABLE_COLUMNS if base == "bits" else ("hypothesis", "p", "s_nats", "mlr", "deviance")


def _render(columns, cells: list[list[str]], fmt: str, provenance: Provenance | None,
            numeric=None) -> bytes:
    if fmt not in TABLE_FORMATS:
        raise InputError(f"format must be one of {TABLE_FORMATS}, got {fmt!r}")
    numeric = set(columns[1:]) if numeric is None else set(numeric)
    if fmt == "csv":
        buf = io.StringIO()
        if provenance is not None:
            buf.write(f"# {provenance.line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(cells)
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        rows = [
            {c: (_json_number(v) if c in numeric else v) for c, v in zip(columns, r)}
            for r in cells
        ]
        doc = {"rows": rows}
        if provenance is not None:
            doc = {"tool": provenance.tool, "version": provenance.version,
                   "input_digest": provenance.digest, "rows": rows}
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    lines = []
    if provenance is not None:
        lines.append(f"<!-- {provenance.line} -->")
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("|" + "|".join("---" if i == 0 else "---:" for i in range(len(columns))) + "|")
    for r in cells:
        lines.append("| " + " | ".join(v.replace("|", "\\|") for v in r) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_table(rows, fmt: str = "csv", *, base: str = "bits",
               provenance: Provenance | None = None) -> bytes:
    """Serialize CompatPoint or STableRow rows.

    S-values follow :func:`display_round`; other numbers get 3 significant digits.
    """
    rows = list(rows)
    if not rows:
        raise InputError("cannot emit an empty table")
    columns = _columns(base)
    return _render(columns, [_cells(r, base) for r in rows], fmt, provenance)


def emit_intervals(intervals, fmt: str = "csv", *, provenance: Provenance | None = None) -> bytes:
    intervals = list(intervals)
    if not intervals:
        raise InputError("cannot emit an empty table")
    columns = ("kind", "level", "lower", "upper", "cutoff")
    if fmt == "json":
        rows = [{"kind": iv.kind, "level": iv.level, "lower": iv.lower, "upper": iv.upper,
                 "cutoff": iv.cutoff} for iv in intervals]
        doc = {"rows": rows}
        if provenance is not None:
            doc = {"tool": provenance.tool, "version": provenance.version,
                   "input_digest": provenance.digest, "rows": rows}
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    cells = [
        [iv.kind, fmt_sig(iv.level, 4), fmt_sig(iv.lower, 4), fmt_sig(iv.upper, 4),
         "" if iv.cutoff is None else fmt_sig(iv.cutoff, 4)]
        for iv in intervals
    ]
    return _render(columns, cells, fmt, provenance)


def emit_curve_table(sample: CurveSample, fmt: str = "csv", *,
                     provenance: Provenance | None = None) -> bytes:
    columns = ("value",) + MEASURES
    cells = [[repr(v)] + [repr(cp.measure(m)) for m in MEASURES] for v, cp in sample.points]
    return _render(columns, cells, fmt, provenance)


def parse_table(data: bytes, fmt: str = "csv") -> list[dict]:
    """Read back a table written by :func:`emit_table` (csv or json)."""
    text = data.decode("utf-8")
    if fmt == "csv":
        body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
        out = []
        for rec in csv.DictReader(io.StringIO(body)):
            out.append({k: (v if k == "hypothesis" else _json_number(v)) for k, v in rec.items()})
        return out
    if fmt == "json":
        return json.loads(text)["rows"]
    raise InputError(f"cannot parse format {fmt!r}")


# ---- plots ----

_DEFAULT_REFS = {"p": (0.25, 0.05, 0.01)}
_MEASURE_TITLES = {
    "p": "P-value",
    "s_bits": "S-value (bits)",
    "rel_likelihood": "Relative likelihood (1/MLR)",
    "deviance": "Deviance 2 ln(MLR)",
}


@dataclass(frozen=True)
class ReferenceLine:
    measure: str
    value: float
    label: str | None = None


@dataclass(frozen=True)
class PlotSpec:
    measure: str = "p"
    reference_lines: tuple[ReferenceLine, ...] = ()
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    band: IntervalEstimate | None = None
    width: float = 640.0
    height: float = 400.0
    title: str | None = None
    x_label: str = "Parameter value"

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValidationError(f"unknown measure {self.measure!r}", field="measure")
        object.__setattr__(self, "reference_lines", tuple(self.reference_lines))
        for ref in self.reference_lines:
            if ref.measure != self.measure:
                raise ValidationError(
                    f"reference line for {ref.measure!r} on a {self.measure!r} plot",
                    field="reference_lines",
                )
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("plot dimensions must be positive", field="width")

    @classmethod
    def standard(cls, measure: str = "p", **kw) -> PlotSpec:
        """Spec with the customary reference lines for the measure."""
        refs = tuple(ReferenceLine(measure, v) for v in _DEFAULT_REFS.get(measure, ()))
        return cls(measure=measure, reference_lines=refs, **kw)


_MARGIN = {"left": 70.0, "right": 60.0, "top": 36.0, "bottom": 52.0}


@dataclass(frozen=True)
class PlotFrame:
    """Affine map between data coordinates and SVG user units.

    The x axis is linear in the analysis-scale value (log for ratio measures).
    """

    scale: Scale
    t0: float
    t1: float
    y0: float
    y1: float
    left: float
    top: float
    width: float
    height: float

    def x_to_px(self, x: float) -> float:
        return self.left + (self.scale.transform(x) - self.t0) / (self.t1 - self.t0) * self.width

    def px_to_x(self, px: float) -> float:
        return self.scale.inverse(self.t0 + (px - self.left) / self.width * (self.t1 - self.t0))

    def y_to_px(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return self.top + (1.0 - frac) * self.height

    def px_to_y(self, py: float) -> float:
        return self.y0 + (1.0 - (py - self.top) / self.height) * (self.y1 - self.y0)


def _nice_step(span: float, target: int = 5) -> float:
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            return m * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    start = math.ceil(lo / step - 1e-9)
    ticks = []
    i = start
    while i * step <= hi + 1e-9 * step:
        ticks.append(round(i * step, 12))
        i += 1
    return ticks


def _ratio_ticks(lo: float, hi: float) -> list[float]:
    for mantissas in ((1, 2, 5), (1, 2, 3, 5), (1, 1.5, 2, 3, 4, 5, 7)):
        ticks = []
        for e in range(math.floor(math.log10(lo)) - 1, math.ceil(math.log10(hi)) + 1):
            for mnt in mantissas:
                v = round(mnt * 10.0 ** e, 12)
                if lo <= v <= hi:
                    ticks.append(v)
        if len(ticks) >= 4:
            return ticks
    return ticks or [lo, hi]


def plot_frame(sample: CurveSample, spec: PlotSpec) -> PlotFrame:
    scale = sample.grid.scale
    lo, hi = spec.x_range if spec.x_range is not None else (sample.grid.lo, sample.grid.hi)
    if spec.y_range is not None:
        y0, y1 = spec.y_range
    elif spec.measure in ("p", "rel_likelihood"):
        y0, y1 = 0.0, 1.0
    else:
        top = max(sample.series(spec.measure))
        top = max(top, *(r.value for r in spec.reference_lines)) if spec.reference_lines else top
        y0, y1 = 0.0, (_linear_ticks(0.0, top)[-1] if top > 0 else 1.0)
        if y1 < top:
            y1 += _nice_step(top)
    if not y1 > y0:
        raise ValidationError("empty y range", field="y_range")
    return PlotFrame(
        scale=scale,
        t0=scale.transform(lo),
        t1=scale.transform(hi),
        y0=y0,
        y1=y1,
        left=_MARGIN["left"],
        top=_MARGIN["top"],
        width=spec.width - _MARGIN["left"] - _MARGIN["right"],
        height=spec.height - _MARGIN["top"] - _MARGIN["bottom"],
    )


def _f(x: float) -> str:
    return f"{x:.3f}"


def emit_plot(sample: CurveSample, spec: PlotSpec, *, provenance: Provenance | None = None) -> bytes:
    """Standalone SVG of one measure along the curve."""
    if len(sample.points) < 2:
        raise ValidationError("curve needs at least two samples", field="curve")
    frame = plot_frame(sample, spec)
    measure = spec.measure
    xs = sample.values
    ys = sample.series(measure)
    left, top = frame.left, frame.top
    right, bottom = left + frame.width, top + frame.height

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if provenance is not None:
        out.append(f"<!-- {escape(provenance.line)} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(spec.width)}" '
        f'height="{_f(spec.height)}" viewBox="0 0 {_f(spec.width)} {_f(spec.height)}">'
    )
    out.append(f'<rect class="background" x="0" y="0" width="{_f(spec.width)}" '
               f'height="{_f(spec.height)}" fill="white"/>')
    if spec.band is not None:
        bx0 = min(max(frame.x_to_px(spec.band.lower), left), right)
        bx1 = min(max(frame.x_to_px(spec.band.upper), left), right)
        out.append(f'<rect class="band" x="{_f(bx0)}" y="{_f(top)}" width="{_f(bx1 - bx0)}" '
                   f'height="{_f(frame.height)}" fill="#d9d9d9" fill-opacity="0.6"/>')

    # axes
    out.append(f'<line class="axis" x1="{_f(left)}" y1="{_f(bottom)}" x2="{_f(right)}" '
               f'y2="{_f(bottom)}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" '
               f'y2="{_f(bottom)}" stroke="black"/>')
    lo, hi = frame.scale.inverse(frame.t0), frame.scale.inverse(frame.t1)
    xticks = _ratio_ticks(lo, hi) if frame.scale is Scale.RATIO else _linear_ticks(lo, hi)
    for v in xticks:
        px = frame.x_to_px(v)
        out.append(f'<line class="tick" x1="{_f(px)}" y1="{_f(bottom)}" x2="{_f(px)}" '
                   f'y2="{_f(bottom + 5)}" stroke="black"/>')
        out.append(f'<text x="{_f(px)}" y="{_f(bottom + 18)}" font-size="11" '
                   f'text-anchor="middle">{v:g}</text>')
    for v in _linear_ticks(frame.y0, frame.y1):
        py = frame.y_to_px(v)
        out.append(f'<line class="tick" x1="{_f(left - 5)}" y1="{_f(py)}" x2="{_f(left)}" '
                   f'y2="{_f(py)}" stroke="black"/>')
        out.append(f'<text x="{_f(left - 8)}" y="{_f(py + 4)}" font-size="11" '
                   f'text-anchor="end">{v:g}</text>')
    if measure == "p":
        # right-hand axis: compatibility level (1 - p) in percent
        out.append(f'<line class="axis" x1="{_f(right)}" y1="{_f(top)}" x2="{_f(right)}" '
                   f'y2="{_f(bottom)}" stroke="black"/>')
        for v in _linear_ticks(frame.y0, frame.y1):
            py = frame.y_to_px(v)
            out.append(f'<text x="{_f(right + 8)}" y="{_f(py + 4)}" font-size="11" '
                       f'text-anchor="start">{(1 - v) * 100:.0f}%</text>')
        out.append(f'<text x="{_f(spec.width - 12)}" y="{_f(top + frame.height / 2)}" '
                   f'font-size="12" text-anchor="middle" transform="rotate(90 '
                   f'{_f(spec.width - 12)} {_f(top + frame.height / 2)})">'
                   f'Compatibility level (%)</text>')
    out.append(f'<text x="{_f(left + frame.width / 2)}" y="{_f(spec.height - 10)}" '
               f'font-size="12" text-anchor="middle">{escape(spec.x_label)}</text>')
    out.append(f'<text x="14" y="{_f(top + frame.height / 2)}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 14 {_f(top + frame.height / 2)})">'
               f'{escape(_MEASURE_TITLES[measure])}</text>')
    if spec.title:
        out.append(f'<text x="{_f(spec.width / 2)}" y="20" font-size="14" '
                   f'text-anchor="middle">{escape(spec.title)}</text>')

    for ref in spec.reference_lines:
        py = frame.y_to_px(ref.value)
        label = ref.label if ref.label is not None else f"{ref.value:g}"
        out.append(f'<line class="ref" data-value="{ref.value!r}" x1="{_f(left)}" '
                   f'y1="{_f(py)}" x2="{_f(right)}" y2="{_f(py)}" stroke="#888888" '
                   f'stroke-dasharray="4 3"/>')
        out.append(f'<text x="{_f(left + 4)}" y="{_f(py - 3)}" font-size="10" '
                   f'fill="#555555">{escape(label)}</text>')

    pts = [(frame.x_to_px(x), frame.y_to_px(y)) for x, y in zip(xs, ys)]
    d = "M " + " L ".join(f"{_f(px)} {_f(py)}" for px, py in pts)
    out.append(f'<path class="curve" d="{d}" fill="none" stroke="black" stroke-width="1.5"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


# ---- narrative ----

def _round_pct(v: float) -> int:
    """Nearest integer below 10%, two significant digits above."""
    if abs(v) < 10.0:
        return int(math.floor(v + 0.5))
    digits = 1 - int(math.floor(math.log10(abs(v))))
    return int(round(v, digits))


def _change(x: float) -> int:
    return _round_pct((x - 1.0) * 100.0)


def _a(n: int) -> str:
    digits = str(abs(n))
    return "an" if digits.startswith("8") or digits in ("11", "18") else "a"


def _endpoint_phrase(x: float, quantity: str, point_up: bool) -> str:
    pct = _change(x)
    if pct > 0:
        return f"{_a(pct)} {pct}% {quantity} increase"
    if pct < 0:
        return f"{_a(pct)} {-pct}% {quantity} reduction"
    return "no elevation" if point_up else "no change"


def _alpha_text(level: float) -> str:
    return f"{1.0 - level:.3g}"


def check_banned_words(text: str) -> None:
    for word in BANNED_WORDS:
        if re.search(word, text, flags=re.IGNORECASE):
            raise ValidationError(f"text must not use the word {word!r}", field="narrative")


def narrative(model: NormalApprox, level: float = 0.95, context_label: str | None = None,
              quantity: str = "hazard") -> str:
    """Plain-language summary of the estimate and its compatibility interval."""
    for text in (context_label or "", quantity):
        check_banned_words(text)
    ci = compatibility_interval(model, level)
    alpha = _alpha_text(level)
    lead = f"After {context_label}, " if context_label else "In this analysis, "
    null = model.scale.null_value
    at_null = p_point(model, null)
    if model.scale is Scale.RATIO:
        pct = _change(model.point)
        if pct > 0:
            est = f"{_a(pct)} {pct}% {quantity} elevation remained"
        elif pct < 0:
            est = f"{_a(pct)} {-pct}% {quantity} reduction remained"
        else:
            est = f"no change in {quantity} (0% elevation) was estimated"
        up = pct > 0
        lo_phrase = _endpoint_phrase(ci.lower, quantity, up)
        hi_phrase = _endpoint_phrase(ci.upper, quantity, up)
        first = (f"{lead}{est}; however, under the same model, every hypothesis from "
                 f"{lo_phrase} up to {hi_phrase} had p > {alpha}.")
        null_text = "no association"
    else:
        first = (f"{lead}an estimated difference of {model.point:.3g} was obtained; however, "
                 f"under the same model, every hypothesis from a difference of {ci.lower:.3g} "
                 f"up to {ci.upper:.3g} had p > {alpha}.")
        null_text = "no difference"
    second = (f"The {level * 100:g}% compatibility interval runs from {ci.lower:.3g} to "
              f"{ci.upper:.3g}, and the results supply {display_round(at_null.s_bits)} bits of "
              f"information against {null_text} (p = {fmt_sig(at_null.p)}).")
    text = first + " " + second
    check_banned_words(text)
    return text


# ---- report bundle ----

DEFAULT_LEVELS = (0.75, 0.95, 0.99)


def _num(x: float):
    return None if math.isinf(x) else x


@dataclass(frozen=True)
class ReportBundle:
    label: str
    model: NormalApprox
    rows: tuple[CompatPoint, ...]
    intervals: tuple[IntervalEstimate, ...]
    curve: CurveSample
    narrative: str
    digest: str
    version: str = __version__
    summary: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "tool": TOOL,
            "version": self.version,
            "input_digest": self.digest,
            "label": self.label,
            "input": self.summary,
            "model": {
                "m": self.model.m,
                "d": self.model.d,
                "scale": self.model.scale.value,
                "asymmetry": self.model.asymmetry,
                "flags": list(self.model.flags),
            },
            "hypotheses": [
                {
                    "hypothesis": r.hypothesis.label,
                    "kind": r.hypothesis.kind.value,
                    "z": r.z,
                    "p": r.p,
                    "s_bits": r.s_bits,
                    "s_bits_display": display_round(r.s_bits),
                    "s_nats": r.s_nats,
                    "mlr": _num(r.mlr),
                    "deviance": r.deviance,
                    "rel_likelihood": r.rel_likelihood,
                    "saturated": r.saturated,
                    "extrapolated": r.extrapolated,
                }
                for r in self.rows
            ],
            "intervals": [
                {"kind": iv.kind, "level": iv.level, "lower": iv.lower, "upper": iv.upper,
                 "cutoff": iv.cutoff}
                for iv in self.intervals
            ],
            "curve": {
                "lo": self.curve.grid.lo,
                "hi": self.curve.grid.hi,
                "count": self.curve.grid.count,
                "spacing": self.curve.grid.spacing,
                "samples": [
                    {"value": v, **{m: _num(cp.measure(m)) for m in MEASURES}}
                    for v, cp in self.curve.points
                ],
            },
            "narrative": self.narrative,
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.as_dict(), indent=2, allow_nan=False) + "\n").encode("utf-8")

    def to_markdown(self) -> bytes:
        prov = Provenance(self.digest, version=self.version)
        m = self.model
        parts = [
            f"<!-- {prov.line} -->",
            f"# {self.label}",
            "",
            f"Normal model on the {m.scale.value} scale: m = {m.m:.6g}, d = {m.d:.6g}"
            + (f" (asymmetry {m.asymmetry:.3g} d: approximation strained)" if m.strained else ""),
            "",
            "## Test hypotheses",
            "",
            emit_table(self.rows, "markdown").decode("utf-8").rstrip("\n"),
            "",
            "## Intervals",
            "",
            emit_intervals(self.intervals, "markdown").decode("utf-8").rstrip("\n"),
            "",
            "## Summary",
            "",
            self.narrative,
            "",
        ]
        return "\n".join(parts).encode("utf-8")


def build_report(summary: StudySummary, hypotheses=None, levels=DEFAULT_LEVELS,
                 grid: GridSpec | None = None, context_label: str | None = None,
                 likelihood_cutoffs=()) -> ReportBundle:
    """Run the full analysis for one study summary."""
    model = recover_normal_approx(summary)
    if hypotheses is None:
        null = summary.scale.null_value
        hypotheses = [Hypothesis.point(null), Hypothesis.point(summary.point)]
    rows = tuple(hypothesis_table(model, hypotheses))
    intervals = [compatibility_interval(model, lv) for lv in levels]
    intervals += [likelihood_interval(model, c) for c in likelihood_cutoffs]
    level = 0.95 if 0.95 in levels or not levels else levels[0]
    return ReportBundle(
        label=summary.label,
        model=model,
        rows=rows,
        intervals=tuple(intervals),
        curve=sample_curve(model, grid),
        narrative=narrative(model, level, context_label),
        digest=input_digest(summary),
        summary=summary.as_dict(),
    )
