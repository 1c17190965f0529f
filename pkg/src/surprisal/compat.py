"""P-values, S-values, likelihood ratios and intervals under a normal test model.

Every measure for a point hypothesis H: theta = r derives from one normal
score z = (m - t(r)) / d:

    p = 2 (1 - Phi(|z|)),  s = -log2 p,  MLR = exp(z^2 / 2),  deviance = z^2.

Surprisals are computed from ln p directly, so they stay finite even when p
itself underflows; such points carry ``saturated=True`` and a clamped p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError, SaturationError
from .special import (
    MIN_PROB,
    check_probability,
    chi2_survival_1df,
    log_std_normal_cdf,
    std_normal_isf,
    std_normal_sf,
)
from .study import NormalApprox, Scale

LN2 = math.log(2.0)
# exp overflows beyond this
_MAX_EXP_ARG = 709.0


class HypothesisKind(str, Enum):
    POINT = "point"
    AT_MOST = "at_most"
    AT_LEAST = "at_least"
    INTERVAL = "interval"


@dataclass(frozen=True)
class Hypothesis:
    """A test hypothesis about the parameter, on the natural scale."""

    kind: HypothesisKind
    value: float
    upper: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", HypothesisKind(self.kind))
        if not math.isfinite(self.value):
            raise DomainError(f"hypothesis value must be finite, got {self.value!r}")
        if self.kind is HypothesisKind.INTERVAL:
            if self.upper is None or not math.isfinite(self.upper) or not self.value < self.upper:
                raise DomainError(f"interval hypothesis needs a < b, got {self.value!r}, {self.upper!r}")
        elif self.upper is not None:
            raise DomainError(f"{self.kind.value} hypothesis takes a single value")

    @classmethod
    def point(cls, r: float) -> Hypothesis:
        return cls(HypothesisKind.POINT, r)

    @classmethod
    def at_most(cls, r: float) -> Hypothesis:
        return cls(HypothesisKind.AT_MOST, r)

    @classmethod
    def at_least(cls, r: float) -> Hypothesis:
        return cls(HypothesisKind.AT_LEAST, r)

    @classmethod
    def interval(cls, a: float, b: float) -> Hypothesis:
        return cls(HypothesisKind.INTERVAL, a, b)

    @classmethod
    def parse(cls, text: str) -> Hypothesis:
        """Parse ``2``, ``=2``, ``<=2``, ``>=2`` or ``0.5:2``."""
        text = text.strip()
        try:
            if text.startswith("<="):
                return cls.at_most(float(text[2:]))
            if text.startswith(">="):
                return cls.at_least(float(text[2:]))
            if ":" in text:
                a, b = text.split(":", 1)
                return cls.interval(float(a), float(b))
            return cls.point(float(text.lstrip("=")))
        except ValueError:
            raise DomainError(f"cannot parse hypothesis {text!r}") from None

    def check_domain(self, scale: Scale) -> None:
        for v in (self.value, self.upper):
            if v is not None and not scale.in_domain(v):
                raise DomainError(f"hypothesis value {v!r} outside the {scale.value} scale domain")

    @property
    def label(self) -> str:
        if self.kind is HypothesisKind.POINT:
            return f"= {self.value:g}"
        if self.kind is HypothesisKind.AT_MOST:
            return f"<= {self.value:g}"
        if self.kind is HypothesisKind.AT_LEAST:
            return f">= {self.value:g}"
        return f"[{self.value:g}, {self.upper:g}]"


@dataclass(frozen=True)
class CompatPoint:
    hypothesis: Hypothesis
    z: float
    p: float
    s_bits: float
    s_nats: float
    mlr: float
    deviance: float
    rel_likelihood: float
    saturated: bool = False
    # MLR/deviance for composite hypotheses use a boundary convention
    extrapolated: bool = False

    def measure(self, name: str) -> float:
        if name not in MEASURES:
            raise DomainError(f"unknown measure {name!r}; expected one of {MEASURES}")
        return getattr(self, name)


MEASURES = ("p", "s_bits", "rel_likelihood", "deviance")


def _from_log_p(hypothesis: Hypothesis, z: float, log_p: float, lr_z: float,
                extrapolated: bool = False) -> CompatPoint:
    """Assemble a CompatPoint from ln p and the z score that drives the likelihood ratio."""
    s_nats = max(0.0, -log_p)
    p = math.exp(log_p) if log_p < 0.0 else 1.0
    saturated = p < 2.2250738585072014e-308
    if saturated:
        p = max(p, MIN_PROB)
    half_dev = 0.5 * lr_z * lr_z
    if half_dev > _MAX_EXP_ARG:
        saturated = True
        mlr = math.inf
        rel = MIN_PROB
    else:
        mlr = math.exp(half_dev)
        rel = max(math.exp(-half_dev), MIN_PROB)
    return CompatPoint(
        hypothesis=hypothesis,
        z=z,
        p=p,
        s_bits=s_nats / LN2,
        s_nats=s_nats,
        mlr=mlr,
        deviance=2.0 * half_dev,
        rel_likelihood=rel,
        saturated=saturated,
        extrapolated=extrapolated,
    )


def _check_r(model: NormalApprox, r: float) -> float:
    r = float(r)
    if not model.scale.in_domain(r):
        raise DomainError(f"{r!r} is outside the {model.scale.value} scale domain")
    return r


def p_point(model: NormalApprox, r: float) -> CompatPoint:
    """Two-sided test of H: theta = r."""
    r = _check_r(model, r)
    z = model.z(r)
    log_p = LN2 + log_std_normal_cdf(-abs(z))
    return _from_log_p(Hypothesis.point(r), z, min(log_p, 0.0), z)


def p_directional(model: NormalApprox, r: float, direction: str | HypothesisKind) -> CompatPoint:
    """One-sided test of H: theta <= r (``at_most``) or H: theta >= r (``at_least``).

    The supremum of p over the composite hypothesis sits at the boundary r.
    The likelihood ratio is 1 when the estimate lies inside H and
    exp(z^2/2) at the boundary otherwise.
    """
    kind = HypothesisKind(direction)
    if kind not in (HypothesisKind.AT_MOST, HypothesisKind.AT_LEAST):
        raise DomainError(f"direction must be 'at_most' or 'at_least', got {direction!r}")
    r = _check_r(model, r)
    z = model.z(r)
    if kind is HypothesisKind.AT_MOST:
        log_p = log_std_normal_cdf(-z)
        outside = z > 0.0
    else:
        log_p = log_std_normal_cdf(z)
        outside = z < 0.0
    return _from_log_p(Hypothesis(kind, r), z, log_p, z if outside else 0.0, extrapolated=True)


def p_interval_hypothesis(model: NormalApprox, a: float, b: float) -> CompatPoint:
    """Test of H: a <= theta <= b: sup of the point p-values over [a, b]."""
    a, b = _check_r(model, a), _check_r(model, b)
    hyp = Hypothesis.interval(a, b)
    ta, tb = model.scale.transform(a), model.scale.transform(b)
    if ta <= model.m <= tb:
        return _from_log_p(hyp, 0.0, 0.0, 0.0, extrapolated=True)
    nearer = a if model.m < ta else b
    z = model.z(nearer)
    log_p = min(LN2 + log_std_normal_cdf(-abs(z)), 0.0)
    return _from_log_p(hyp, z, log_p, z, extrapolated=True)


def evaluate(model: NormalApprox, hypothesis: Hypothesis) -> CompatPoint:
    hypothesis.check_domain(model.scale)
    if hypothesis.kind is HypothesisKind.POINT:
        return p_point(model, hypothesis.value)
    if hypothesis.kind is HypothesisKind.INTERVAL:
        return p_interval_hypothesis(model, hypothesis.value, hypothesis.upper)
    return p_directional(model, hypothesis.value, hypothesis.kind)


# ---- conversions between p, s, MLR and deviance ----

def _positive_p(p: float) -> float:
    p = check_probability(p)
    if p == 0.0:
        raise SaturationError("p = 0 has unbounded surprisal", MIN_PROB)
    return p


def s_value(p: float, base: str = "bits") -> float:
    """Surprisal -log(p) in bits (base 2) or nats (base e)."""
    p = _positive_p(p)
    if base == "bits":
        return -math.log2(p) + 0.0
    if base == "nats":
        return -math.log(p) + 0.0
    raise DomainError(f"base must be 'bits' or 'nats', got {base!r}")


def _z_from_p(p: float) -> float:
    p = _positive_p(p)
    if p == 1.0:
        return 0.0
    return std_normal_isf(0.5 * p)


def deviance_from_p(p: float) -> float:
    """Likelihood-ratio statistic z^2 matching a two-sided p on 1 df."""
    z = _z_from_p(p)
    return z * z


def mlr_from_p(p: float) -> float:
    """Maximum-likelihood ratio exp(z^2/2) matching a two-sided p."""
    half = 0.5 * deviance_from_p(p)
    if half > _MAX_EXP_ARG:
        raise SaturationError(f"MLR for p={p!r} overflows", MIN_PROB)
    return math.exp(half)


def p_from_s(s: float, base: str = "bits") -> float:
    if not (math.isfinite(s) and s >= 0.0):
        raise DomainError(f"S-value must be a finite number >= 0, got {s!r}")
    if base == "bits":
        p = 2.0 ** -s
    elif base == "nats":
        p = math.exp(-s)
    else:
        raise DomainError(f"base must be 'bits' or 'nats', got {base!r}")
    if p == 0.0:
        raise SaturationError(f"p for s={s!r} {base} underflows", MIN_PROB)
    return p


def p_from_deviance(deviance: float) -> float:
    p = chi2_survival_1df(deviance)
    if p == 0.0:
        raise SaturationError(f"p for deviance {deviance!r} underflows", MIN_PROB)
    return p


def p_from_mlr(mlr: float) -> float:
    if not (math.isfinite(mlr) and mlr >= 1.0):
        raise DomainError(f"MLR must be a finite number >= 1, got {mlr!r}")
    return p_from_deviance(2.0 * math.log(mlr))


# ---- intervals ----

@dataclass(frozen=True)
class IntervalEstimate:
    level: float
    lower: float
    upper: float
    kind: str = "compatibility"
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in ("compatibility", "likelihood"):
            raise DomainError(f"unknown interval kind {self.kind!r}")
        if not self.lower <= self.upper:
            raise DomainError(f"interval bounds out of order: {self.lower!r} > {self.upper!r}")

    def contains(self, r: float) -> bool:
        return self.lower < r < self.upper


def compatibility_interval(model: NormalApprox, level: float) -> IntervalEstimate:
    """All parameter values whose two-sided p exceeds 1 - level."""
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")
    half = std_normal_isf(0.5 * (1.0 - level)) * model.d
    inv = model.scale.inverse
    return IntervalEstimate(level, inv(model.m - half), inv(model.m + half))


def likelihood_interval(model: NormalApprox, cutoff: float) -> IntervalEstimate:
    """All parameter values whose MLR does not exceed ``cutoff``."""
    cutoff = float(cutoff)
    if not (math.isfinite(cutoff) and cutoff > 1.0):
        raise DomainError(f"likelihood cutoff must be > 1, got {cutoff!r}")
    dev = 2.0 * math.log(cutoff)
    half = math.sqrt(dev) * model.d
    inv = model.scale.inverse
    level = 1.0 - chi2_survival_1df(dev)
    return IntervalEstimate(level, inv(model.m - half), inv(model.m + half), "likelihood", cutoff)


# ---- curves ----

@dataclass(frozen=True)
class GridSpec:
    """Grid of parameter values, evenly spaced on the analysis scale."""

    lo: float
    hi: float
    count: int = 401
    scale: Scale = Scale.RATIO
    spacing: str = "transformed-linear"

    def __post_init__(self):
        object.__setattr__(self, "scale", Scale(self.scale))
        if self.spacing != "transformed-linear":
            raise DomainError(f"unsupported grid spacing {self.spacing!r}")
        if isinstance(self.count, bool) or int(self.count) != self.count or self.count < 2:
            raise DomainError(f"grid needs at least 2 nodes, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))
        for v in (self.lo, self.hi):
            if not self.scale.in_domain(v):
                raise DomainError(f"grid bound {v!r} outside the {self.scale.value} scale domain")
        if not self.lo < self.hi:
            raise DomainError(f"grid needs lo < hi, got {self.lo!r}, {self.hi!r}")

    @classmethod
    def default(cls, model: NormalApprox, width: float = 4.0, count: int = 401) -> GridSpec:
        """m +/- ``width`` standard deviations on the analysis scale."""
        inv = model.scale.inverse
        return cls(inv(model.m - width * model.d), inv(model.m + width * model.d), count, model.scale)

    @property
    def step(self) -> float:
        """Node spacing on the analysis scale."""
        t = self.scale.transform
        return (t(self.hi) - t(self.lo)) / (self.count - 1)

    def nodes(self) -> list[float]:
        t, inv = self.scale.transform, self.scale.inverse
        a, b = t(self.lo), t(self.hi)
        n = self.count - 1
        # endpoints exact, interior nodes by interpolation
        out = [self.lo]
        out += [inv(a + (b - a) * i / n) for i in range(1, n)]
        out.append(self.hi)
        return out


@dataclass(frozen=True)
class CurveSample:
    grid: GridSpec
    points: tuple[tuple[float, CompatPoint], ...]

    @property
    def values(self) -> list[float]:
        return [v for v, _ in self.points]

    def series(self, measure: str) -> list[float]:
        return [cp.measure(measure) for _, cp in self.points]


def curve(model: NormalApprox, grid: GridSpec | None = None) -> CurveSample:
    """Evaluate every point-hypothesis measure at each grid node."""
    if grid is None:
        grid = GridSpec.default(model)
    if grid.scale is not model.scale:
        raise DomainError("grid scale does not match the model scale")
    return CurveSample(grid, tuple((r, p_point(model, r)) for r in grid.nodes()))


# ---- tables ----

def hypothesis_table(model: NormalApprox, hypotheses) -> list[CompatPoint]:
    hypotheses = list(hypotheses)
    if not hypotheses:
        raise DomainError("hypothesis table needs at least one hypothesis")
    rows = []
    for i, h in enumerate(hypotheses, start=1):
        if not isinstance(h, Hypothesis):
            h = Hypothesis.point(h)
        try:
            rows.append(evaluate(model, h))
        except SaturationError as exc:
            raise SaturationError(f"hypothesis row {i}: {exc}", exc.boundary) from None
        except DomainError as exc:
            raise DomainError(f"hypothesis row {i}: {exc}") from None
    return rows


@dataclass(frozen=True)
class STableRow:
    label: str
    p: float
    s_bits: float
    mlr: float
    deviance: float

    @property
    def s_nats(self) -> float:
        return self.s_bits * LN2


#: p values of the canonical translation table; sigma rows are upper normal tails
CANONICAL_P_VALUES: tuple[tuple[str, float], ...] = (
    ("0.99", 0.99),
    ("0.90", 0.90),
    ("0.50", 0.50),
    ("0.25", 0.25),
    ("0.10", 0.10),
    ("0.05", 0.05),
    ("0.025", 0.025),
    ("0.01", 0.01),
    ("0.005", 0.005),
    ("0.0001", 0.0001),
    ("5 sigma", std_normal_sf(5.0)),
    ("1 in 100 million (GWAS)", 1e-8),
    ("6 sigma", std_normal_sf(6.0)),
)


def s_table(p_list=None) -> list[STableRow]:
    """Rows of (p, s_bits, MLR, deviance); ``None`` gives the canonical table.

    Items are p values or ``(label, p)`` pairs.
    """
    if p_list is None:
        p_list = CANONICAL_P_VALUES
    rows = []
    for item in p_list:
        label, p = item if isinstance(item, tuple) else (f"{item:g}", item)
        p = _positive_p(p)
        rows.append(STableRow(label, p, s_value(p, "bits"), mlr_from_p(p), deviance_from_p(p)))
    return rows


#: S-values (bits) above this are shown as integers
S_ROUNDING_THRESHOLD = 10.0


def display_round(s_bits: float) -> str:
    """Two decimals up to 10 bits, nearest integer above."""
    if not (math.isfinite(s_bits) and s_bits >= 0.0):
        raise DomainError(f"S-value must be a finite number >= 0, got {s_bits!r}")
    if s_bits <= S_ROUNDING_THRESHOLD:
        return f"{s_bits:.2f}"
    return str(int(math.floor(s_bits + 0.5)))
