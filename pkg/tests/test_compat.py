import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surprisal.combine import ks_critical, ks_uniform
from surprisal.compat import (
    CANONICAL_P_VALUES,
    GridSpec,
    Hypothesis,
    HypothesisKind,
    compatibility_interval,
    curve,
    deviance_from_p,
    display_round,
    evaluate,
    hypothesis_table,
    likelihood_interval,
    mlr_from_p,
    p_directional,
    p_from_deviance,
    p_from_mlr,
    p_from_s,
    p_interval_hypothesis,
    p_point,
    s_table,
    s_value,
)
from surprisal.errors import DomainError, SaturationError
from surprisal.special import chi2_survival_1df
from surprisal.study import NormalApprox, Scale

models = st.builds(
    NormalApprox,
    st.floats(-3, 3),
    st.floats(0.02, 2),
    st.sampled_from([Scale.RATIO, Scale.DIFFERENCE]),
)
probs = st.floats(1e-300, 1.0, exclude_min=False)


class TestPointHypothesis:
    def test_null(self, brown):
        cp = p_point(brown, 1.0)
        assert round(cp.p, 4) == 0.0505
        assert round(cp.s_bits, 2) == 4.31

    def test_point_estimate(self, brown):
        cp = p_point(brown, 1.61)
        assert (cp.p, cp.s_bits, cp.mlr, cp.deviance, cp.rel_likelihood) == (1.0, 0.0, 1.0, 0.0, 1.0)

    def test_doubling(self, brown):
        cp = p_point(brown, 2.0)
        assert round(cp.p, 3) == 0.373
        assert round(cp.s_bits, 2) == 1.42

    def test_halving(self, brown):
        cp = p_point(brown, 0.5)
        assert abs(cp.p - 1.6e-6) <= 0.05e-6
        assert abs(cp.s_bits - 19.3) <= 0.05
        assert abs(cp.mlr - 1.0e5) <= 0.05e5
        assert abs(cp.deviance - 23.1) <= 0.05

    def test_fields_consistent(self, brown):
        cp = p_point(brown, 3.0)
        assert cp.s_nats == pytest.approx(cp.s_bits * math.log(2))
        assert cp.deviance == pytest.approx(2 * math.log(cp.mlr))
        assert cp.rel_likelihood == pytest.approx(1 / cp.mlr)
        assert cp.deviance == pytest.approx(cp.z ** 2)
        assert not cp.extrapolated

    @pytest.mark.parametrize("r", [0.0, -1.0, math.inf, math.nan])
    def test_domain(self, brown, r):
        with pytest.raises(DomainError):
            p_point(brown, r)

    def test_deep_tail_saturates_without_infinite_s(self):
        model = NormalApprox(0.0, 0.01, Scale.DIFFERENCE)
        cp = p_point(model, 1.0)  # z = -100
        assert cp.saturated
        assert cp.p > 0.0
        assert math.isfinite(cp.s_bits) and cp.s_bits > 7000
        assert cp.mlr == math.inf

    @settings(max_examples=200)
    @given(models, st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.booleans())
    def test_monotone_in_distance(self, model, a, b, up):
        lo, hi = sorted((a, b))
        if hi - lo < 1e-6:
            return
        sign = 1 if up else -1
        r1 = model.scale.inverse(model.m + sign * lo * model.d)
        r2 = model.scale.inverse(model.m + sign * hi * model.d)
        c1, c2 = p_point(model, r1), p_point(model, r2)
        assert c1.p >= c2.p
        assert c1.s_bits <= c2.s_bits and c1.mlr <= c2.mlr and c1.deviance <= c2.deviance


class TestDirectional:
    def test_boundary_at_estimate(self, brown):
        for d in ("at_most", "at_least"):
            assert p_directional(brown, 1.61, d).p == pytest.approx(0.5, abs=1e-15)

    def test_less_restrictive_has_larger_p(self, brown):
        assert p_directional(brown, 1.0, "at_most").p < p_directional(brown, 2.0, "at_most").p

    def test_inside_hypothesis_mlr_is_one(self, brown):
        cp = p_directional(brown, 2.0, "at_most")  # estimate 1.61 satisfies HR <= 2
        assert cp.mlr == 1.0 and cp.deviance == 0.0 and cp.extrapolated
        out = p_directional(brown, 1.0, "at_most")
        assert out.mlr == pytest.approx(p_point(brown, 1.0).mlr)

    @given(models, st.floats(-4, 4))
    def test_two_sided_identity(self, model, k):
        r = model.scale.inverse(model.m + k * model.d)
        lo = p_directional(model, r, "at_most").p
        hi = p_directional(model, r, "at_least").p
        assert p_point(model, r).p == pytest.approx(2 * min(lo, hi), rel=1e-12, abs=1e-300)

    @given(models, st.floats(-4, 4), st.floats(-4, 4))
    def test_dominance(self, model, a, b):
        r1, r2 = (model.scale.inverse(model.m + k * model.d) for k in sorted((a, b)))
        assert p_directional(model, r1, "at_most").p <= p_directional(model, r2, "at_most").p

    def test_bad_direction(self, brown):
        with pytest.raises(DomainError):
            p_directional(brown, 1.0, "point")


class TestIntervalHypothesis:
    def test_contains_estimate(self, brown):
        assert p_interval_hypothesis(brown, 0.5, 2.0).p == 1.0

    def test_boundary_supremum_matches_grid_search(self, brown):
        cp = p_interval_hypothesis(brown, 2.0, 3.0)
        grid = np.exp(np.linspace(math.log(2.0), math.log(3.0), 2001))
        best = max(p_point(brown, float(r)).p for r in grid)
        assert cp.p == pytest.approx(best, rel=1e-12)
        assert cp.p == pytest.approx(0.373, abs=5e-4)

    def test_below_estimate(self, brown):
        assert p_interval_hypothesis(brown, 0.5, 1.0).p == pytest.approx(p_point(brown, 1.0).p)

    def test_degenerate_limit(self, brown):
        b = 2.5
        cp = p_interval_hypothesis(brown, b - 1e-12, b)
        assert cp.p == pytest.approx(p_point(brown, b).p, rel=1e-9)

    def test_order(self, brown):
        with pytest.raises(DomainError):
            p_interval_hypothesis(brown, 2.0, 1.0)


class TestConversions:
    def test_s_value_table_rows(self):
        assert round(s_value(0.05), 2) == 4.32
        assert s_value(1.0) == 0.0
        assert round(s_value(0.0001), 1) == 13.3
        assert s_value(math.e ** -2, "nats") == pytest.approx(2.0)

    def test_s_value_errors(self):
        with pytest.raises(SaturationError) as exc:
            s_value(0.0)
        assert exc.value.boundary > 0
        with pytest.raises(DomainError):
            s_value(0.5, "decibans")
        with pytest.raises(DomainError):
            s_value(1.5)

    @pytest.mark.parametrize("p, mlr", [(0.05, 6.83), (1.0, 1.00), (0.01, 27.6)])
    def test_mlr(self, p, mlr):
        assert round(mlr_from_p(p), 2 if mlr < 10 else 1) == mlr

    def test_mlr_five_sigma(self):
        assert abs(mlr_from_p(2.9e-7) - 5.2e5) <= 0.05e5

    @pytest.mark.parametrize("p, dev", [(0.05, 3.84), (1.0, 0.0), (0.25, 1.32)])
    def test_deviance(self, p, dev):
        assert round(deviance_from_p(p), 2) == dev

    @given(st.floats(1e-300, 0.999999))
    def test_mlr_deviance_chain(self, p):
        dev = deviance_from_p(p)
        assert dev == pytest.approx(2 * math.log(mlr_from_p(p)), rel=1e-10)
        assert chi2_survival_1df(dev) == pytest.approx(p, rel=1e-9, abs=1e-300)

    @given(st.floats(1e-6, 1.0), st.floats(1e-6, 0.999))
    def test_mlr_decreasing(self, a, b):
        lo, hi = sorted((a, b))
        if hi - lo < 1e-9:
            return
        assert mlr_from_p(lo) > mlr_from_p(hi)

    @given(st.floats(1e-150, 1.0), st.floats(1e-150, 1.0))
    def test_additivity(self, a, b):
        assert s_value(a * b) == pytest.approx(s_value(a) + s_value(b), abs=1e-10)

    @given(st.floats(1e-12, 1.0))
    def test_inverse_conversions(self, p):
        assert p_from_s(s_value(p)) == pytest.approx(p, rel=1e-12)
        assert p_from_s(s_value(p, "nats"), "nats") == pytest.approx(p, rel=1e-12)
        assert p_from_deviance(deviance_from_p(p)) == pytest.approx(p, rel=1e-9)
        assert p_from_mlr(mlr_from_p(p)) == pytest.approx(p, rel=1e-9)


class TestIntervals:
    def test_brown_95(self, brown):
        ci = compatibility_interval(brown, 0.95)
        # asymmetry of the printed interval moves each end by about 0.2%
        assert ci.lower == pytest.approx(0.997, rel=3e-3)
        assert ci.upper == pytest.approx(2.59, rel=3e-3)

    def test_nesting(self, brown):
        a, b, c = (compatibility_interval(brown, lv) for lv in (0.75, 0.95, 0.99))
        assert c.lower < b.lower < a.lower < a.upper < b.upper < c.upper

    def test_level_to_zero(self, brown):
        ci = compatibility_interval(brown, 1e-12)
        assert ci.lower == pytest.approx(1.61, rel=1e-10)
        assert ci.upper == pytest.approx(1.61, rel=1e-10)

    @pytest.mark.parametrize("level", [0.0, 1.0, -0.2])
    def test_level_domain(self, brown, level):
        with pytest.raises(DomainError):
            compatibility_interval(brown, level)

    def test_interior_exterior(self, brown):
        ci = compatibility_interval(brown, 0.9)
        grid = np.exp(np.linspace(math.log(0.5), math.log(4), 3001))
        for r in grid:
            p = p_point(brown, float(r)).p
            if ci.lower * (1 + 1e-9) < r < ci.upper * (1 - 1e-9):
                assert p > 0.1
            elif r < ci.lower * (1 - 1e-9) or r > ci.upper * (1 + 1e-9):
                assert p < 0.1

    @settings(max_examples=200)
    @given(models, st.floats(0.001, 0.999))
    def test_duality(self, model, level):
        ci = compatibility_interval(model, level)
        for end in (ci.lower, ci.upper):
            assert abs(p_point(model, end).p - (1 - level)) <= 1e-9

    @given(models, st.floats(0.01, 0.98), st.floats(0.01, 0.98))
    def test_nesting_property(self, model, a, b):
        lo, hi = sorted((a, b))
        if hi - lo < 1e-6:
            return
        inner, outer = compatibility_interval(model, lo), compatibility_interval(model, hi)
        assert outer.lower <= inner.lower and inner.upper <= outer.upper

    def test_likelihood_683(self, brown):
        li = likelihood_interval(brown, 6.83)
        ci = compatibility_interval(brown, 0.95)
        for a, b in ((li.lower, ci.lower), (li.upper, ci.upper)):
            assert abs(a - b) <= 0.5 * 10 ** (math.floor(math.log10(b)) - 2)
        assert li.kind == "likelihood" and li.level == pytest.approx(0.95, abs=1e-4)

    def test_likelihood_collapse(self, brown):
        li = likelihood_interval(brown, 1 + 1e-14)
        assert li.upper == pytest.approx(1.61, rel=1e-6)

    def test_likelihood_tripling_row(self, brown):
        # tabulated MLR is 26.2 at HR = 3; closed form upper end is exp(m + sqrt(2 ln 26.2) d)
        li = likelihood_interval(brown, 26.2)
        expected = math.exp(brown.m + math.sqrt(2 * math.log(26.2)) * brown.d)
        assert li.upper == pytest.approx(expected, rel=1e-12)
        assert li.upper == pytest.approx(3.0, abs=0.005)

    @pytest.mark.parametrize("cutoff", [1.0, 0.5, -3.0, math.inf])
    def test_likelihood_domain(self, brown, cutoff):
        with pytest.raises(DomainError):
            likelihood_interval(brown, cutoff)

    @given(models, st.floats(0.01, 0.999))
    def test_likelihood_correspondence(self, model, level):
        li = likelihood_interval(model, mlr_from_p(1 - level))
        ci = compatibility_interval(model, level)
        assert li.lower == pytest.approx(ci.lower, rel=1e-9, abs=1e-12)
        assert li.upper == pytest.approx(ci.upper, rel=1e-9, abs=1e-12)


class TestCurve:
    def test_default_grid(self, brown):
        c = curve(brown)
        assert c.grid.count == 401 and len(c.points) == 401
        ps = c.series("p")
        peak = int(np.argmax(ps))
        assert c.values[peak] == pytest.approx(1.61, rel=1e-12)
        assert ps[peak] == pytest.approx(1.0)
        assert all(b > a for a, b in zip(c.values, c.values[1:]))
        assert min(ps) == pytest.approx(2 * 0.5 * math.erfc(4 / math.sqrt(2)), rel=1e-9)

    def test_null_node(self, brown):
        c = curve(brown, GridSpec(0.5, 2.0, 401, Scale.RATIO))
        i = c.values.index(min(c.values, key=lambda v: abs(v - 1.0)))
        assert c.values[i] == pytest.approx(1.0, abs=1e-12)
        assert round(c.points[i][1].p, 4) == 0.0505

    def test_symmetry(self, brown):
        c = curve(brown)
        ps = c.series("p")
        for a, b in zip(ps, reversed(ps)):
            assert a == pytest.approx(b, rel=1e-9)

    def test_all_measures(self, brown):
        c = curve(brown, GridSpec(0.8, 3.0, 5))
        for m in ("p", "s_bits", "rel_likelihood", "deviance"):
            assert len(c.series(m)) == 5

    @pytest.mark.parametrize("args", [(0.0, 2.0, 5), (2.0, 1.0, 5), (1.0, 2.0, 1), (1.0, 2.0, 2.5)])
    def test_bad_grid(self, args):
        with pytest.raises(DomainError):
            GridSpec(*args, scale=Scale.RATIO)

    def test_scale_mismatch(self, brown):
        with pytest.raises(DomainError):
            curve(brown, GridSpec(-1.0, 1.0, 5, Scale.DIFFERENCE))


TABLE2 = [
    # HR, p, s, MLR, LR statistic (as printed)
    (0.5, "1.6e-6", "19.3", "1.0e5", "23.1"),
    (1.0, "0.05", "4.31", "6.77", "3.82"),
    (1.61, "1", "0.00", "1.00", "0.00"),
    (2.0, "0.37", "1.42", "1.49", "0.79"),
    (3.0, "0.01", "6.56", "26.2", "6.53"),
    (5.0, "3.3e-6", "18.2", "5.0e4", "21.7"),
]


def half_unit(text: str) -> float:
    from decimal import Decimal

    return 0.5 * 10.0 ** Decimal(text).as_tuple().exponent


class TestHypothesisTable:
    @pytest.mark.parametrize("row", TABLE2, ids=[str(r[0]) for r in TABLE2])
    def test_table2_row(self, brown, row):
        cp = hypothesis_table(brown, [row[0]])[0]
        for got, printed in zip((cp.p, cp.s_bits, cp.mlr, cp.deviance), row[1:]):
            assert abs(got - float(printed)) <= half_unit(printed) + 1e-12

    def test_order_preserved(self, brown):
        rows = hypothesis_table(brown, [Hypothesis.point(3), Hypothesis.at_most(2), 1.0,
                                        Hypothesis.interval(0.5, 2)])
        assert [r.hypothesis.kind for r in rows] == [HypothesisKind.POINT, HypothesisKind.AT_MOST,
                                                    HypothesisKind.POINT, HypothesisKind.INTERVAL]

    def test_identity_row(self, brown):
        (cp,) = hypothesis_table(brown, [1.61])
        assert (cp.p, cp.s_bits, cp.mlr, cp.deviance) == (1.0, 0.0, 1.0, 0.0)

    def test_errors_carry_row(self, brown):
        with pytest.raises(DomainError, match="row 2"):
            hypothesis_table(brown, [1.0, -2.0])
        with pytest.raises(DomainError):
            hypothesis_table(brown, [])

    @pytest.mark.parametrize("text, kind", [("2", "point"), ("=2", "point"), ("<=2", "at_most"),
                                            (">=2", "at_least"), ("0.5:2", "interval")])
    def test_parse(self, text, kind):
        assert Hypothesis.parse(text).kind.value == kind

    def test_evaluate_domain(self, brown):
        with pytest.raises(DomainError):
            evaluate(brown, Hypothesis.interval(-1, 2))


class TestSTable:
    def test_thirteen_rows(self):
        assert len(s_table()) == 13 == len(CANONICAL_P_VALUES)

    def test_0005(self):
        (r,) = s_table([0.005])
        assert (round(r.s_bits, 2), round(r.mlr, 1), round(r.deviance, 2)) == (7.64, 51.4, 7.88)

    def test_gwas(self):
        (r,) = s_table([1e-8])
        assert round(r.s_bits, 1) == 26.6
        assert abs(r.mlr - 1.4e7) <= 0.05e7
        assert round(r.deviance, 1) == 32.8

    def test_099(self):
        (r,) = s_table([0.99])
        assert abs(r.s_bits - 0.014) <= 0.0005
        assert round(r.mlr, 2) == 1.00
        assert abs(r.deviance - 0.00016) <= 0.000005

    def test_rejects_zero(self):
        with pytest.raises(SaturationError):
            s_table([0.0])


class TestDisplayRound:
    @pytest.mark.parametrize("s, text", [(4.317, "4.32"), (19.27, "19"), (10.0, "10.00"),
                                         (0.0, "0.00"), (10.5, "11"), (10.001, "10")])
    def test_rule(self, s, text):
        assert display_round(s) == text

    def test_negative(self):
        with pytest.raises(DomainError):
            display_round(-1.0)


def test_validity_law():
    """p at the true parameter is uniform and s in nats unit-exponential."""
    rng = np.random.default_rng(20200826)
    truth = NormalApprox(math.log(1.61), 0.2435, Scale.RATIO)
    n = 100_000
    estimates = rng.normal(truth.m, truth.d, n)
    ps = np.empty(n)
    for i, est in enumerate(estimates):
        ps[i] = p_point(NormalApprox(float(est), truth.d, Scale.RATIO), 1.61).p
    crit = ks_critical(n)
    assert ks_uniform(ps) < crit
    s_nats = -np.log(ps)
    # unit-exponential CDF maps s back to uniform
    assert ks_uniform(1.0 - np.exp(-s_nats)) < crit
    assert s_nats.mean() == pytest.approx(1.0, abs=0.02)
