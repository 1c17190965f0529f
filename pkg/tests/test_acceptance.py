"""Exit criteria, one test per criterion, at the stated tolerances.

A one-line PASS/FAIL summary per criterion is printed at the end of the run.
"""

import math
import random
import time
from decimal import Decimal

import mpmath
import pytest

import oracles
import svgcheck
from surprisal.combine import combine_p, null_calibration
from surprisal.compat import (
    compatibility_interval,
    curve,
    deviance_from_p,
    hypothesis_table,
    likelihood_interval,
    p_point,
    s_table,
    s_value,
)
from surprisal.report import PlotSpec, ReferenceLine, emit_plot, narrative, plot_frame
from surprisal.special import chi2_survival_1df, chi2_survival_even_df, std_normal_cdf
from surprisal.study import NormalApprox, Scale, recover_normal_approx

pytestmark = pytest.mark.acceptance


def half_unit(printed: str) -> float:
    return 0.5 * 10.0 ** Decimal(printed).as_tuple().exponent


def off_by(got: float, printed: str):
    """None when ``got`` matches ``printed`` to half a unit in its last digit."""
    if abs(got - float(printed)) <= half_unit(printed) + 1e-15 * abs(got):
        return None
    return f"{got!r} vs printed {printed}"


# p value, S-value, MLR, deviance as printed in the reference tables
TABLE1 = [
    ("0.99", "0.014", "1.00", "0.00016"),
    ("0.90", "0.15", "1.01", "0.016"),
    ("0.50", "1.00", "1.26", "0.45"),
    ("0.25", "2.00", "1.94", "1.32"),
    ("0.10", "3.32", "3.87", "2.71"),
    ("0.05", "4.32", "6.83", "3.84"),
    ("0.025", "5.32", "12.3", "5.02"),
    ("0.01", "6.64", "27.6", "6.63"),
    ("0.005", "7.64", "51.4", "7.88"),
    ("0.0001", "13.3", "1935", "15.1"),
    ("5 sigma", "21.7", "5.2e5", "26.3"),
    ("GWAS", "26.6", "1.4e7", "32.8"),
    ("6 sigma", "29.9", "1.3e8", "37.4"),
]

TABLE2 = [
    (0.5, "1.6e-6", "19.3", "1.0e5", "23.1"),
    (1.0, "0.05", "4.31", "6.77", "3.82"),
    (1.61, "1", "0.00", "1.00", "0.00"),
    (2.0, "0.37", "1.42", "1.49", "0.79"),
    (3.0, "0.01", "6.56", "26.2", "6.53"),
    (5.0, "3.3e-6", "18.2", "5.0e4", "21.7"),
]


def test_table1(capsys):
    """1. Canonical p table: s/MLR/deviance for 13 p values within half a printed unit, < 1 s"""
    t0 = time.perf_counter()
    rows = s_table()
    elapsed = time.perf_counter() - t0
    assert len(rows) == 13
    bad = []
    for row, printed in zip(rows, TABLE1):
        for name, got, want in zip(("s", "MLR", "deviance"), (row.s_bits, row.mlr, row.deviance), printed[1:]):
            msg = off_by(got, want)
            if msg:
                bad.append(f"p={printed[0]} {name}: {msg}")
    assert elapsed < 1.0
    assert not bad, "; ".join(bad)


def test_table2():
    """2. Hypothesis table for the worked hazard-ratio example: 24 cells at printed precision, p(1) = 0.0505, p(2) = 0.373, < 1 s"""
    t0 = time.perf_counter()
    model = recover_normal_approx_quiet()
    rows = hypothesis_table(model, [r[0] for r in TABLE2])
    elapsed = time.perf_counter() - t0
    bad = []
    for cp, printed in zip(rows, TABLE2):
        for name, got, want in zip(("p", "s", "MLR", "LR"), (cp.p, cp.s_bits, cp.mlr, cp.deviance), printed[1:]):
            msg = off_by(got, want)
            if msg:
                bad.append(f"HR={printed[0]} {name}: {msg}")
    assert not bad, "; ".join(bad)
    assert off_by(rows[1].p, "0.0505") is None
    assert off_by(rows[3].p, "0.373") is None
    assert elapsed < 1.0


def recover_normal_approx_quiet():
    import logging

    from conftest import BROWN

    logging.disable(logging.WARNING)
    try:
        return recover_normal_approx(BROWN)
    finally:
        logging.disable(logging.NOTSET)


def test_interval_round_trip():
    """3. Round trip (0.997, 2.59) within 0.001 relative; 75% and 99% strictly nested"""
    model = recover_normal_approx_quiet()
    ci75, ci95, ci99 = (compatibility_interval(model, lv) for lv in (0.75, 0.95, 0.99))
    problems = []
    if not (ci99.lower < ci95.lower < ci75.lower < ci75.upper < ci95.upper < ci99.upper):
        problems.append("intervals not strictly nested")
    for got, want in ((ci95.lower, 0.997), (ci95.upper, 2.59)):
        rel = abs(got - want) / want
        if rel > 1e-3:
            problems.append(f"{got:.6f} vs {want} (relative {rel:.2e})")
    assert not problems, "; ".join(problems)


def test_duality_suite():
    """4. 1000 random models: p(endpoint) = 1 - level to 1e-9; p->deviance->p to 1e-9; additivity 1e-10; < 10 s"""
    rng = random.Random(4)
    t0 = time.perf_counter()
    for _ in range(1000):
        scale = rng.choice([Scale.RATIO, Scale.DIFFERENCE])
        model = NormalApprox(rng.uniform(-3, 3), rng.uniform(0.01, 2.0), scale)
        level = rng.uniform(0.001, 0.999)
        ci = compatibility_interval(model, level)
        for end in (ci.lower, ci.upper):
            assert abs(p_point(model, end).p - (1 - level)) <= 1e-9
        p = 10 ** rng.uniform(-12, 0)
        assert abs(chi2_survival_1df(deviance_from_p(p)) - p) <= 1e-9
        p1, p2 = 10 ** rng.uniform(-100, 0), 10 ** rng.uniform(-100, 0)
        assert abs(s_value(p1 * p2) - (s_value(p1) + s_value(p2))) <= 1e-10
    assert time.perf_counter() - t0 < 10.0


def test_likelihood_correspondence():
    """5. 1/6.83 likelihood interval equals the 95% compatibility interval to 3 significant digits"""
    model = recover_normal_approx_quiet()
    li = likelihood_interval(model, 6.83)
    ci = compatibility_interval(model, 0.95)
    for a, b in ((li.lower, ci.lower), (li.upper, ci.upper)):
        assert abs(a - b) <= 0.5 * 10 ** (math.floor(math.log10(abs(b))) - 2)


def test_combination():
    """6. K=1 exact; K=2 (0.05, 0.05) -> 0.0175 +/- 1e-4 vs quadrature; calibration K in {1,3,5} at 100k sims; < 60 s"""
    t0 = time.perf_counter()
    for p in (0.05, 0.5, 1e-6, 0.987654321):
        assert combine_p([p], independence_asserted=True).combined_p == p
    r = combine_p([0.05, 0.05], independence_asserted=True)
    oracle = oracles.chi2_sf_quad(r.statistic, 4)
    assert abs(r.combined_p - oracle) <= 1e-4
    assert abs(r.combined_p - 0.0175) <= 1e-4
    for k in (1, 3, 5):
        rep = null_calibration(k, 100_000, seed=20200826 + k)
        assert abs(rep.mean_sum_s_nats - k) <= 0.01 * k
        assert rep.ks_distance < rep.ks_critical_01
    assert time.perf_counter() - t0 < 60.0


def test_special_function_oracles():
    """7. Normal CDF within 1e-14 of series/CF oracle on |z| <= 8 (10,000 points); chi2 even-df within 1e-10 of quadrature"""
    rng = random.Random(7)
    zs = [rng.uniform(-8, 8) for _ in range(9_990)] + [-8.0, -6.0, -4.0, -1.0, 0.0, 1.0, 4.0, 6.0, 7.99, 8.0]
    worst = 0.0
    with mpmath.workdps(40):
        for z in zs:
            worst = max(worst, abs(std_normal_cdf(z) - float(oracles.ncdf(z))))
    assert worst <= 1e-14, worst
    worst = 0.0
    for k in range(1, 21):
        for x in (0.0, 0.1, 1.0, 2.5, 5.0, 10.0, 17.3, 25.0, 40.0, 60.0, 80.0, 100.0):
            worst = max(worst, abs(chi2_survival_even_df(x, 2 * k) - oracles.chi2_sf_quad(x, 2 * k)))
    assert worst <= 1e-10, worst


def test_plot_faithfulness():
    """8. SVG crossings of p = 0.25/0.05/0.01 lines within one grid step of closed-form interval ends"""
    model = recover_normal_approx_quiet()
    sample = curve(model)
    alphas = (0.25, 0.05, 0.01)
    spec = PlotSpec("p", reference_lines=tuple(ReferenceLine("p", a) for a in alphas))
    _, points, refs = svgcheck.parse(emit_plot(sample, spec))
    frame = plot_frame(sample, spec)
    step = sample.grid.step
    for a in alphas:
        xs = sorted(frame.px_to_x(px) for px in svgcheck.crossings(points, refs[a]))
        assert len(xs) == 2
        ci = compatibility_interval(model, 1 - a)
        for got, want in zip(xs, (ci.lower, ci.upper)):
            assert abs(math.log(got) - math.log(want)) <= step


def test_narrative():
    """9. Worked-example narrative contains '61%' and '160%' and neither 'significant' nor 'confidence'"""
    text = narrative(recover_normal_approx_quiet(), 0.95, "HDPS adjustment for confounding")
    assert "61%" in text and "160%" in text
    low = text.lower()
    assert "significant" not in low and "confidence" not in low
