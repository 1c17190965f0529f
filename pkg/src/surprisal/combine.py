"""Combining surprisals against a shared hypothesis across independent studies.

Under the hypothesis each study's S-value in nats is unit-exponential, so
twice their sum is chi-square on 2K degrees of freedom.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .compat import LN2
from .errors import InputError, SaturationError
from .special import MIN_PROB, chi2_survival_even_df, log_chi2_survival_even_df

UNITS = ("p", "s_bits", "s_nats")
SIDEDNESS = ("two-sided", "one-sided")
GENERATOR = "numpy PCG64"
# calibration work is split into this many chunks whatever the worker count
_CHUNKS = 16


@dataclass(frozen=True)
class CombinationInput:
    """Per-study evidence in a single unit: p values, or S-values in bits or nats."""

    values: tuple[float, ...]
    independence_asserted: bool
    unit: str = "p"
    sidedness: str = "two-sided"
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.unit not in UNITS:
            raise InputError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if self.sidedness not in SIDEDNESS:
            raise InputError(f"sidedness must be one of {SIDEDNESS}, got {self.sidedness!r}")
        if self.independence_asserted is not True:
            raise InputError("summed-surprisal combination requires independent studies; "
                             "set independence_asserted=True to record that assumption")
        if not self.values:
            raise InputError("need at least one study to combine")
        if self.labels and len(self.labels) != len(self.values):
            raise InputError("labels and values differ in length")
        for i, v in enumerate(self.values, start=1):
            if self.unit == "p":
                if v == 0.0:
                    raise SaturationError(f"study {i}: p = 0 has unbounded surprisal", MIN_PROB)
                if not 0.0 < v <= 1.0:
                    raise InputError(f"study {i}: p must lie in (0, 1], got {v!r}")
            elif not (math.isfinite(v) and v >= 0.0):
                raise InputError(f"study {i}: S-value must be finite and >= 0, got {v!r}")

    @property
    def k(self) -> int:
        return len(self.values)

    def s_nats(self) -> list[float]:
        if self.unit == "p":
            return [-math.log(p) + 0.0 for p in self.values]
        if self.unit == "s_bits":
            return [s * LN2 for s in self.values]
        return list(self.values)


@dataclass(frozen=True)
class CombinedEvidence:
    k: int
    sum_s_nats: float
    statistic: float
    df: int
    combined_p: float
    combined_s_bits: float
    saturated: bool
    sidedness: str
    independence_asserted: bool
    labels: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "labels": list(self.labels),
            "sum_s_nats": self.sum_s_nats,
            "statistic": self.statistic,
            "df": self.df,
            "combined_p": self.combined_p,
            "combined_s_bits": self.combined_s_bits,
            "saturated": self.saturated,
            "sidedness": self.sidedness,
            "independence_asserted": self.independence_asserted,
        }


def combine(inp: CombinationInput) -> CombinedEvidence:
    """Refer twice the summed nat surprisal to chi-square with 2K df."""
    s = inp.s_nats()
    total = math.fsum(s)
    statistic = 2.0 * total
    df = 2 * inp.k
    if inp.k == 1 and inp.unit == "p":
        # chi2_2 survival of 2(-ln p) is exactly p
        combined_p = inp.values[0]
        log_p = math.log(combined_p)
    else:
        log_p = log_chi2_survival_even_df(statistic, df)
        combined_p = chi2_survival_even_df(statistic, df)
    saturated = combined_p < 2.2250738585072014e-308
    if saturated:
        combined_p = max(combined_p, MIN_PROB)
    return CombinedEvidence(
        k=inp.k,
        sum_s_nats=total,
        statistic=statistic,
        df=df,
        combined_p=combined_p,
        combined_s_bits=max(0.0, -log_p / LN2),
        saturated=saturated,
        sidedness=inp.sidedness,
        independence_asserted=inp.independence_asserted,
        labels=inp.labels,
    )


def combine_p(p_values, *, independence_asserted: bool, sidedness: str = "two-sided",
              labels=()) -> CombinedEvidence:
    return combine(CombinationInput(tuple(p_values), independence_asserted, "p", sidedness, tuple(labels)))


# ---- null calibration ----

def _chi2_even_sf_vec(x: np.ndarray, df: int) -> np.ndarray:
    h = 0.5 * x
    term = np.ones_like(h)
    total = np.ones_like(h)
    for j in range(1, df // 2):
        term = term * h / j
        total += term
    return np.minimum(1.0, np.exp(-h) * total)


def ks_uniform(sample: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of a sample from Uniform(0, 1)."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value sqrt(-ln(alpha/2)/2) / sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


@dataclass(frozen=True)
class CalibrationReport:
    k: int
    n_sims: int
    seed: int
    generator: str
    mean_sum_s_nats: float
    expected_mean: float
    ks_distance: float
    ks_critical_01: float

    @property
    def uniform_ok(self) -> bool:
        return self.ks_distance < self.ks_critical_01

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "n_sims": self.n_sims,
            "seed": self.seed,
            "generator": self.generator,
            "mean_sum_s_nats": self.mean_sum_s_nats,
            "expected_mean": self.expected_mean,
            "ks_distance": self.ks_distance,
            "ks_critical_01": self.ks_critical_01,
            "uniform_ok": self.uniform_ok,
        }


def _simulate_chunk(seq: np.random.SeedSequence, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seq))
    # 1 - U lies in (0, 1]
    p = 1.0 - rng.random((n, k))
    sums = -np.log(p).sum(axis=1)
    return sums, _chi2_even_sf_vec(2.0 * sums, 2 * k)


def null_calibration(k: int, n_sims: int = 100_000, seed: int = 0, workers: int = 1) -> CalibrationReport:
    """Simulate K independent uniform p values n_sims times and check calibration.

    Results depend only on (k, n_sims, seed): the work is cut into a fixed
    number of chunks with seeds spawned from ``seed``, whatever ``workers`` is.
    """
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise InputError(f"K must be a positive integer, got {k!r}")
    if isinstance(n_sims, bool) or int(n_sims) != n_sims or n_sims < 1000:
        raise InputError(f"n_sims must be an integer >= 1000, got {n_sims!r}")
    if int(seed) != seed or seed < 0:
        raise InputError(f"seed must be a non-negative integer, got {seed!r}")
    k, n_sims, seed = int(k), int(n_sims), int(seed)
    sizes = [n_sims // _CHUNKS + (1 if i < n_sims % _CHUNKS else 0) for i in range(_CHUNKS)]
    seqs = np.random.SeedSequence(seed).spawn(_CHUNKS)
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        parts = list(pool.map(lambda a: _simulate_chunk(a[0], a[1], k), zip(seqs, sizes)))
    sums = np.concatenate([s for s, _ in parts])
    combined = np.concatenate([c for _, c in parts])
    return CalibrationReport(
        k=k,
        n_sims=n_sims,
        seed=seed,
        generator=GENERATOR,
        mean_sum_s_nats=float(sums.mean()),
        expected_mean=float(k),
        ks_distance=ks_uniform(combined),
        ks_critical_01=ks_critical(n_sims),
    )
