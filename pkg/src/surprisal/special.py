"""Normal and chi-square functions used by every other module.

The error function comes from the C library via :func:`math.erfc`, which is
accurate to a few ulp across the whole double range and keeps relative
accuracy in the tails.  Quantiles are obtained by root finding against
:func:`std_normal_cdf` itself so that ``cdf(quantile(q)) == q`` holds to
rounding error.
"""

from __future__ import annotations

import math

from .errors import DomainError

Probability = float
ZScore = float

#: smallest positive (subnormal) double; probabilities are clamped here before logs
MIN_PROB = 5e-324

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# below this z, Phi(z) is subnormal and loses relative precision
_LOG_TAIL_SWITCH = -37.0


def _check_finite(x: float, name: str = "z") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def check_probability(p: float, name: str = "p", *, open_low: bool = False) -> float:
    """Validate ``p`` as a probability in [0, 1] (or (0, 1] with ``open_low``)."""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a number, got {p!r}") from None
    if not math.isfinite(p) or p < 0.0 or p > 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    if open_low and p == 0.0:
        raise DomainError(f"{name} must be > 0")
    return p


def std_normal_cdf(z: ZScore) -> Probability:
    """Phi(z), the standard normal cumulative distribution function."""
    z = _check_finite(z)
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_sf(z: ZScore) -> Probability:
    """Upper tail 1 - Phi(z), computed without cancellation."""
    z = _check_finite(z)
    return 0.5 * math.erfc(z / _SQRT2)


def std_normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z - _LOG_SQRT_2PI)


def log_std_normal_cdf(z: ZScore) -> float:
    """ln Phi(z), finite even where Phi(z) underflows.

    Deep in the lower tail the asymptotic expansion
    Phi(-x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...) is used; at
    x >= 37 the truncation error of eight terms is far below double precision.
    """
    z = _check_finite(z)
    if z >= _LOG_TAIL_SWITCH:
        if z > 5.0:
            # Phi(z) close to 1; log1p of the small upper tail
            return math.log1p(-std_normal_sf(z))
        return math.log(std_normal_cdf(z))
    x = -z
    inv = 1.0 / (x * x)
    series = 1.0
    term = 1.0
    for k in range(1, 9):
        term *= -(2 * k - 1) * inv
        series += term
    return -0.5 * x * x - math.log(x) - _LOG_SQRT_2PI + math.log(series)


def log_std_normal_sf(z: ZScore) -> float:
    """ln(1 - Phi(z))."""
    return log_std_normal_cdf(-_check_finite(z))


def _lower_tail_quantile(tail: float) -> float:
    """Solve Phi(z) = tail for 0 < tail <= 0.5 (so z <= 0).

    Newton iteration on ln Phi, safeguarded by a bracket.  Working on the log
    keeps the step well conditioned far into the tail, where Phi itself is
    tiny but its logarithm is smooth and nearly quadratic.
    """
    if tail == 0.5:
        return 0.0
    target = math.log(tail)
    lo, hi = -40.0, 0.0
    # asymptotic starting point; ln Phi(-x) ~ -x^2/2 for large x
    z = -math.sqrt(max(-2.0 * target - math.log(max(-2.0 * target, 1.0)) - math.log(2 * math.pi), 0.0))
    z = min(max(z, lo), hi)
    for _ in range(100):
        f = log_std_normal_cdf(z) - target
        if f > 0.0:
            hi = z
        else:
            lo = z
        # d/dz ln Phi(z) = phi(z)/Phi(z) = exp(ln phi - ln Phi)
        slope = math.exp(-0.5 * z * z - _LOG_SQRT_2PI - log_std_normal_cdf(z))
        step = f / slope
        z_new = z - step
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= 1e-15 * max(1.0, abs(z)):
            z = z_new
            break
        z = z_new
    return z


def std_normal_quantile(q: Probability) -> ZScore:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile requires 0 < q < 1, got {q!r}")
    if q <= 0.5:
        return _lower_tail_quantile(q)
    # 1 - q is exact for q in [0.5, 1)
    return -_lower_tail_quantile(1.0 - q)


def std_normal_isf(tail: Probability) -> ZScore:
    """z with 1 - Phi(z) = tail; keeps full relative accuracy for tiny tails."""
    tail = float(tail)
    if not (0.0 < tail < 1.0):
        raise DomainError(f"upper-tail quantile requires 0 < tail < 1, got {tail!r}")
    if tail <= 0.5:
        return -_lower_tail_quantile(tail)
    return _lower_tail_quantile(1.0 - tail)


def chi2_survival_1df(x: float) -> Probability:
    """P(chi2_1 > x) = 2(1 - Phi(sqrt x)), the two-sided p whose deviance is x."""
    x = _check_finite(x, "x")
    if x < 0.0:
        raise DomainError(f"chi-square statistic must be >= 0, got {x!r}")
    return 2.0 * std_normal_sf(math.sqrt(x))


def _check_even_df(df: int) -> int:
    if isinstance(df, bool) or int(df) != df or df <= 0 or int(df) % 2:
        raise DomainError(f"df must be an even positive integer, got {df!r}")
    return int(df)


def log_chi2_survival_even_df(x: float, df: int) -> float:
    """ln P(chi2_df > x) for even df, stable for any x >= 0."""
    x = _check_finite(x, "x")
    if x < 0.0:
        raise DomainError(f"chi-square statistic must be >= 0, got {x!r}")
    k = _check_even_df(df) // 2
    h = 0.5 * x
    if h == 0.0:
        return 0.0
    # log-sum-exp over the Poisson terms h^j / j!
    logs = [j * math.log(h) - math.lgamma(j + 1) for j in range(k)]
    top = max(logs)
    return -h + top + math.log(math.fsum(math.exp(v - top) for v in logs))


def chi2_survival_even_df(x: float, df: int) -> Probability:
    """P(chi2_df > x) = exp(-x/2) * sum_{j<df/2} (x/2)^j / j!  for even df."""
    x = _check_finite(x, "x")
    if x < 0.0:
        raise DomainError(f"chi-square statistic must be >= 0, got {x!r}")
    k = _check_even_df(df) // 2
    h = 0.5 * x
    if h > 700.0:
        return math.exp(log_chi2_survival_even_df(x, df))
    if h < 0.5 * k:
        # survival near 1: sum the (small) lower tail sum_{j>=k} e^-h h^j/j! instead
        term = math.exp(k * math.log(h) - h - math.lgamma(k + 1)) if h > 0.0 else 0.0
        terms = []
        j = k
        while term > 0.0 and (not terms or term > 1e-17 * terms[0]):
            terms.append(term)
            j += 1
            term *= h / j
        return 1.0 - math.fsum(terms)
    term = 1.0
    terms = [1.0]
    for j in range(1, k):
        term *= h / j
        terms.append(term)
    return min(1.0, math.exp(-h) * math.fsum(terms))
