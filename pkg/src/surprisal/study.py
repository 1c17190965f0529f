"""Reported study summaries and the normal approximation recovered from them."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError, InputError, ParseError, ValidationError
from .special import std_normal_isf, std_normal_quantile

log = logging.getLogger(__name__)

#: asymmetry (in units of d) above which the recovered model is flagged
ASYMMETRY_WARN = 0.01
#: relative disagreement tolerated between a supplied SE and the interval width
SE_TOLERANCE = 0.01


class Scale(str, Enum):
    RATIO = "ratio"
    DIFFERENCE = "difference"

    def transform(self, x: float) -> float:
        if self is Scale.RATIO:
            if not x > 0.0:
                raise DomainError(f"ratio-scale value must be > 0, got {x!r}")
            return math.log(x)
        return float(x)

    def inverse(self, t: float) -> float:
        return math.exp(t) if self is Scale.RATIO else float(t)

    def in_domain(self, x: float) -> bool:
        return math.isfinite(x) and (self is Scale.DIFFERENCE or x > 0.0)

    @property
    def null_value(self) -> float:
        """Parameter value representing no effect."""
        return 1.0 if self is Scale.RATIO else 0.0


def _parse_scale(value) -> Scale:
    try:
        return Scale(value)
    except ValueError:
        raise ValidationError(
            f"scale must be 'ratio' or 'difference', got {value!r}", field="scale"
        ) from None


@dataclass(frozen=True)
class StudySummary:
    """A published point estimate with its interval estimate.

    ``se`` is optional; when given it is the standard error on the analysis
    (log, for ratio measures) scale and must agree with the interval width.
    """

    label: str
    point: float
    lower: float
    upper: float
    level: float = 0.95
    scale: Scale = Scale.RATIO
    se: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scale", _parse_scale(self.scale))
        for name in ("point", "lower", "upper", "level"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"must be a finite number, got {value!r}", field=name)
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.level < 1.0:
            raise ValidationError(f"must lie in (0, 1), got {self.level!r}", field="level")
        if self.upper <= self.lower:
            raise ValidationError(
                f"degenerate interval: lower {self.lower!r} >= upper {self.upper!r}", field="lower"
            )
        if not self.lower < self.point < self.upper:
            raise ValidationError(
                f"point {self.point!r} not strictly inside ({self.lower!r}, {self.upper!r})",
                field="point",
            )
        if self.scale is Scale.RATIO and self.lower <= 0.0:
            raise ValidationError("ratio-scale values must be > 0", field="lower")
        if self.se is not None:
            if not math.isfinite(self.se) or self.se <= 0.0:
                raise ValidationError(f"must be a positive number, got {self.se!r}", field="se")
            object.__setattr__(self, "se", float(self.se))

    @classmethod
    def from_se(cls, label: str, point: float, se: float, scale: Scale | str = Scale.RATIO,
                level: float = 0.95) -> StudySummary:
        """Build a summary from a point estimate and standard error alone."""
        scale = _parse_scale(scale)
        if not (math.isfinite(se) and se > 0.0):
            raise ValidationError(f"must be a positive number, got {se!r}", field="se")
        if not 0.0 < level < 1.0:
            raise ValidationError(f"must lie in (0, 1), got {level!r}", field="level")
        t = scale.transform(point)
        half = std_normal_isf((1.0 - level) / 2.0) * se
        return cls(label, point, scale.inverse(t - half), scale.inverse(t + half), level, scale, se)

    def as_dict(self) -> dict:
        out = {
            "label": self.label,
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "scale": self.scale.value,
        }
        if self.se is not None:
            out["se"] = self.se
        return out


@dataclass(frozen=True)
class NormalApprox:
    """Normal test model on the analysis scale: estimate ~ N(m, d^2)."""

    m: float
    d: float
    scale: Scale = Scale.RATIO
    asymmetry: float = 0.0
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scale", _parse_scale(self.scale))
        if not (math.isfinite(self.m) and math.isfinite(self.d)):
            raise InputError("model mean and standard deviation must be finite")
        if self.d <= 0.0:
            raise InputError(f"model standard deviation must be > 0, got {self.d!r}")

    @property
    def point(self) -> float:
        """Point estimate on the natural scale."""
        return self.scale.inverse(self.m)

    @property
    def strained(self) -> bool:
        return self.asymmetry > ASYMMETRY_WARN

    def z(self, r: float) -> float:
        return (self.m - self.scale.transform(r)) / self.d


def recover_normal_approx(summary: StudySummary) -> NormalApprox:
    """Recover (m, d) from a point estimate and a symmetric-on-scale interval.

    m is the transformed point estimate; d is the transformed interval width
    divided by twice the standard-normal quantile for the interval level.
    """
    t = summary.scale.transform
    m = t(summary.point)
    tl, tu = t(summary.lower), t(summary.upper)
    tail = (1.0 - summary.level) / 2.0
    try:
        q = std_normal_isf(tail)
    except DomainError as exc:
        raise InputError(f"interval level {summary.level!r} is too extreme: {exc}") from None
    if not (math.isfinite(q) and q > 0.0):
        raise InputError(f"interval level {summary.level!r} is too extreme")
    d = (tu - tl) / (2.0 * q)
    if not (math.isfinite(d) and d > 0.0):
        raise InputError("interval width does not yield a positive standard deviation")
    if summary.se is not None:
        if abs(summary.se - d) > SE_TOLERANCE * d:
            raise InputError(
                f"{summary.label}: standard error {summary.se!r} disagrees with the "
                f"interval-derived value {d!r} by more than {SE_TOLERANCE:.0%}"
            )
        d = summary.se
    asymmetry = abs((tu - m) - (m - tl)) / d
    flags = ()
    if asymmetry > ASYMMETRY_WARN:
        flags = ("asymmetric-interval",)
        log.warning(
            "%s: interval is asymmetric about the point on the analysis scale "
            "(asymmetry %.4f d); the normal approximation is strained",
            summary.label, asymmetry,
        )
    return NormalApprox(m=m, d=d, scale=summary.scale, asymmetry=asymmetry, flags=flags)


# ---- file ingestion ----

STUDY_COLUMNS = ("label", "point", "lower", "upper", "level", "scale")
OPTIONAL_STUDY_COLUMNS = ("se",)


def _to_number(value, fieldname: str, row: int, *, required: bool = True) -> float | None:
    if value is None or (isinstance(value, str) and value.strip() == ""):
        if required:
            raise ValidationError("missing value", field=fieldname, row=row)
        return None
    if isinstance(value, bool):
        raise ValidationError(f"not a number: {value!r}", field=fieldname, row=row)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"not a number: {value!r}", field=fieldname, row=row) from None
    if not math.isfinite(number):
        raise ValidationError(f"not a finite number: {value!r}", field=fieldname, row=row)
    return number


def _study_from_record(rec: dict, row: int) -> StudySummary:
    label = rec.get("label")
    if label is None or str(label).strip() == "":
        raise ValidationError("missing value", field="label", row=row)
    scale = rec.get("scale")
    try:
        scale = _parse_scale(scale)
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], field="scale", row=row) from None
    point = _to_number(rec.get("point"), "point", row)
    level = _to_number(rec.get("level"), "level", row, required=False)
    se = _to_number(rec.get("se"), "se", row, required=False)
    lower = _to_number(rec.get("lower"), "lower", row, required=se is None)
    upper = _to_number(rec.get("upper"), "upper", row, required=se is None)
    try:
        if lower is None or upper is None:
            if lower is not None or upper is not None:
                raise ValidationError("give both interval bounds or neither", field="lower")
            return StudySummary.from_se(str(label), point, se, scale, 0.95 if level is None else level)
        if level is None:
            raise ValidationError("missing value", field="level")
        summary = StudySummary(str(label), point, lower, upper, level, scale, se)
        if se is not None:
            recover_normal_approx(summary)
        return summary
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], field=exc.field, row=row) from None
    except (InputError, DomainError) as exc:
        raise ValidationError(str(exc), row=row) from None


def _read_records(data: bytes, fmt: str, required: tuple[str, ...],
                  optional: tuple[str, ...]) -> list[tuple[int, dict]]:
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None
    allowed = set(required) | set(optional)
    if fmt == "csv":
        lines = [ln for ln in text.splitlines()]
        # skip provenance comments and blank lines before the header
        start = 0
        while start < len(lines) and (not lines[start].strip() or lines[start].startswith("#")):
            start += 1
        if start == len(lines):
            raise ParseError("missing header row", position=1)
        reader = csv.reader(io.StringIO("\n".join(lines[start:])), strict=True)
        try:
            header = [h.strip() for h in next(reader)]
            missing = [c for c in required if c not in header]
            unknown = [c for c in header if c not in allowed]
            if missing or unknown or len(set(header)) != len(header):
                raise ParseError(
                    f"header must contain exactly {', '.join(required)}"
                    + (f" (optional: {', '.join(optional)})" if optional else "")
                    + f"; got {', '.join(header)}",
                    position=start + 1,
                )
            out = []
            for row_no, values in enumerate(reader, start=1):
                line = start + 1 + reader.line_num - 1
                if not values or all(not v.strip() for v in values):
                    continue
                if len(values) != len(header):
                    raise ParseError(
                        f"expected {len(header)} fields, got {len(values)}", position=line
                    )
                out.append((row_no, dict(zip(header, (v.strip() for v in values)))))
            return out
        except csv.Error as exc:
            raise ParseError(f"malformed CSV: {exc}", position=start + reader.line_num) from None
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", position=exc.lineno) from None
        if not isinstance(doc, list):
            raise ParseError("JSON input must be an array of objects", position=1)
        out = []
        for i, rec in enumerate(doc, start=1):
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", position=i)
            unknown = sorted(set(rec) - allowed)
            if unknown:
                raise ValidationError(f"unknown keys {unknown}", row=i)
            missing = [c for c in required if c not in rec]
            if missing:
                raise ValidationError("missing key", field=missing[0], row=i)
            out.append((i, rec))
        return out
    raise InputError(f"unsupported format {fmt!r}; expected 'csv' or 'json'")


def parse_study_file(data: bytes, fmt: str = "csv") -> list[StudySummary]:
    """Parse study summaries from CSV or JSON bytes.

    CSV needs the header ``label,point,lower,upper,level,scale`` (optionally
    ``se``); bounds may be left blank on a row that supplies ``se``.  JSON is
    an array of objects with the same keys.
    """
    if fmt == "csv":
        records = _read_records(data, fmt, STUDY_COLUMNS, OPTIONAL_STUDY_COLUMNS)
    else:
        records = _read_records(
            data, fmt, ("label", "point", "scale"),
            ("lower", "upper", "level") + OPTIONAL_STUDY_COLUMNS,
        )
    return [_study_from_record(rec, row) for row, rec in records]


def parse_pvalue_file(data: bytes, fmt: str = "csv") -> list[tuple[str, float]]:
    """Parse ``label,p`` records used as input to evidence combination."""
    out = []
    for row, rec in _read_records(data, fmt, ("label", "p"), ()):
        label = rec.get("label")
        if label is None or str(label).strip() == "":
            raise ValidationError("missing value", field="label", row=row)
        p = _to_number(rec.get("p"), "p", row)
        if not 0.0 < p <= 1.0:
            raise ValidationError(f"must lie in (0, 1], got {p!r}", field="p", row=row)
        out.append((str(label), p))
    return out
