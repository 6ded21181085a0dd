import math

import numpy as np
import pytest

from binconformal.errors import ConfigurationError, DataError
from binconformal.evaluation import (
    AGGREGATE,
    QUARTILES,
    MethodSpec,
    StudyConfig,
    coverage,
    lognormal_study,
    mean_width,
    quartile_labels,
    run_replications,
    zicount_study,
)
from binconformal.intervals import PredictionInterval, bins_from_cutpoints, union
from binconformal.models import OutcomeTransform
from binconformal.pipelines import make_intervals

INF = math.inf


def sets_of(*pairs):
    return [union([PredictionInterval(lo, hi)]) for lo, hi in pairs]


class TestCoverage:
    def test_universal_intervals_cover_everything(self):
        sets = [union([PredictionInterval(-INF, INF)])] * 5
        tallies = coverage(sets, [0.0, 1.0, -3.0, 100.0, 7.0])
        assert tallies[AGGREGATE].coverage == 1.0
        assert tallies[AGGREGATE].inf_width_count == 5

    def test_aggregate_is_weighted_mean_of_groups(self):
        rng = np.random.default_rng(31)
        y = rng.uniform(0, 10, size=97)
        sets = []
        for v in rng.uniform(0, 10, size=97):
            lo = v - rng.uniform(0, 2)
            sets.append(union([PredictionInterval(lo, lo + rng.uniform(0, 3))]))
        grouping = bins_from_cutpoints([2.0, 5.0], support_min=0.0)
        tallies = coverage(sets, y, grouping)
        group_names = [g for g in tallies if g != AGGREGATE]
        assert sum(tallies[g].n for g in group_names) == tallies[AGGREGATE].n
        assert sum(tallies[g].covered for g in group_names) == tallies[AGGREGATE].covered

    def test_invariant_to_record_order(self):
        y = np.array([1.0, 4.0, 9.0, 2.5])
        sets = sets_of((0, 2), (3, 5), (10, 11), (0, 1))
        grouping = bins_from_cutpoints([3.0], support_min=0.0)
        a = coverage(sets, y, grouping)
        perm = [2, 0, 3, 1]
        b = coverage([sets[i] for i in perm], y[perm], grouping)
        assert a == b

    def test_length_mismatch_raises(self):
        with pytest.raises(DataError):
            coverage(sets_of((0, 1)), [1.0, 2.0])

    def test_discontiguity_counted(self):
        two_seg = union([PredictionInterval(0, 1), PredictionInterval(3, 4)])
        sets = [two_seg, union([PredictionInterval(0, 4)])]
        tallies = coverage(sets, [0.5, 0.5])
        assert tallies[AGGREGATE].discontiguity_rate == 0.5


class TestMeanWidth:
    def test_degenerate_intervals(self):
        table = mean_width(sets_of((3, 3), (5, 5)), [3.0, 5.0])
        assert table[AGGREGATE] == (2, 0.0, 0)

    def test_single_interval(self):
        table = mean_width(sets_of((0, 10)), [5.0])
        assert table[AGGREGATE] == (1, 10.0, 0)

    def test_infinite_width_excluded_and_counted(self):
        sets = sets_of((0, 10), (0, INF))
        table = mean_width(sets, [1.0, 2.0])
        assert table[AGGREGATE] == (2, 10.0, 1)


class TestQuartileLabels:
    def test_equal_group_sizes(self):
        labels, order = quartile_labels(np.random.default_rng(0).normal(size=1000))
        assert order == ("Q1", "Q2", "Q3", "Q4")
        counts = {g: labels.count(g) for g in order}
        assert max(counts.values()) - min(counts.values()) <= 1


class TestMakeIntervals:
    def test_cutpoint_outcomes_stay_covered_after_back_transform(self):
        # integer outcomes on a bin edge must not fall a float-ulp outside
        # the raw-scale segment that binds at that edge
        rng = np.random.default_rng(8)
        y_cal = np.array([0.0] * 40 + [1.0, 2.0] * 20 + [5.0] * 20)
        p_cal = np.maximum(0.0, y_cal + rng.normal(scale=0.5, size=y_cal.size))
        bins = bins_from_cutpoints([1.0, 3.0], support_min=0.0)
        result = make_intervals(
            "bccp-d", y_cal, p_cal, np.array([0.3, 0.8, 1.2]),
            alpha=0.2, transform=OutcomeTransform.LOG1P, bins=bins,
        )
        for s in result.sets:
            for seg in s:
                for cut in (1.0, 3.0):
                    if abs(seg.lower - cut) < 1e-9:
                        assert seg.lower == cut
                    if abs(seg.upper - cut) < 1e-9:
                        assert seg.upper == cut

    def test_scp_matches_direct_construction_on_identity_scale(self):
        from binconformal.conformal import calibrate, scp_interval

        y_cal = np.arange(1.0, 41.0)
        p_cal = y_cal + np.tile([-1.0, 1.0], 20)
        p_test = np.array([5.0, 20.0])
        result = make_intervals("scp", y_cal, p_cal, p_test, alpha=0.1)
        cal = calibrate(y_cal, p_cal, 0.1)
        for s, p in zip(result.sets, p_test):
            assert s.segments == (scp_interval(p, cal),)

    def test_lognormal_matches_baseline_op_on_log_scale(self):
        from binconformal.baselines import lognormal_interval, residual_sigma

        rng = np.random.default_rng(3)
        y_cal = np.exp(rng.normal(1.0, 0.5, size=200))
        p_cal = np.exp(rng.normal(1.0, 0.2, size=200))
        p_test = np.array([2.0, 7.0])
        result = make_intervals(
            "lognormal", y_cal, p_cal, p_test,
            alpha=0.1, transform=OutcomeTransform.LOG,
        )
        sigma = residual_sigma(y_cal, p_cal, OutcomeTransform.LOG)
        for s, p in zip(result.sets, p_test):
            expected = lognormal_interval(math.log(p), sigma, 0.1)
            assert s.segments[0].lower == pytest.approx(expected.lower)
            assert s.segments[0].upper == pytest.approx(expected.upper)

    def test_bootstrap_log_requires_log_family(self):
        with pytest.raises(ConfigurationError):
            make_intervals(
                "bootstrap-log", np.ones(10), np.ones(10), np.ones(3), alpha=0.1
            )

    def test_bcc_requires_bins(self):
        with pytest.raises(ConfigurationError):
            make_intervals("bccp-d", np.ones(10), np.ones(10), np.ones(3), alpha=0.1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigurationError):
            make_intervals("magic", np.ones(3), np.ones(3), np.ones(1), alpha=0.1)

    def test_clamped_predictions_flagged(self):
        result = make_intervals(
            "scp", np.arange(20.0), np.arange(20.0) + 0.5, np.array([-2.0, 3.0]),
            alpha=0.2, support_min=0.0,
        )
        assert "clamped" in result.flags[0]
        assert "clamped" not in result.flags[1]

    def test_round_counts_produces_integer_bounds(self):
        result = make_intervals(
            "scp", np.arange(20.0), np.arange(20.0) + 0.7, np.array([4.3]),
            alpha=0.2, round_counts=True, support_min=0.0,
        )
        seg = result.sets[0].segments[0]
        assert seg.lower == int(seg.lower) and seg.upper == int(seg.upper)
        assert seg.lower >= 0.0

    def test_crossed_quantiles_flagged(self):
        # constant outcomes make both quantile fits identical; force a
        # crossing by fitting on opposite trends
        rng = np.random.default_rng(5)
        y_cal = np.concatenate([rng.uniform(0, 1, 50), rng.uniform(9, 10, 50)])
        p_cal = np.concatenate([rng.uniform(9, 10, 50), rng.uniform(0, 1, 50)])
        result = make_intervals(
            "quantreg", y_cal, p_cal, np.array([0.5, 9.5]), alpha=0.2
        )
        # intervals are still well-formed even if crossing occurred
        for s in result.sets:
            assert s.segments[0].lower <= s.segments[0].upper


class TestRunReplications:
    def make_tiny_config(self, **overrides):
        base = dict(
            dgp="lognormal",
            n=400,
            proportions=(0.5, 0.25, 0.25),
            alpha=0.1,
            methods=(
                MethodSpec("scp", "scp"),
                MethodSpec("bccp-d-2", "bccp-d", n_bins=2),
            ),
            replications=3,
            base_seed=99,
            model_transform=OutcomeTransform.LOG,
            grouping=QUARTILES,
            support_min=0.0,
        )
        base.update(overrides)
        return StudyConfig(**base)

    def test_single_replicate_is_reproducible(self):
        cfg = self.make_tiny_config(replications=1)
        a = run_replications(cfg)
        b = run_replications(cfg)
        assert a.stats == b.stats
        assert a.groups == b.groups

    def test_aggregate_coverage_near_half_for_alpha_half(self):
        cfg = self.make_tiny_config(alpha=0.5, replications=60)
        report = run_replications(cfg)
        stat = report.get("scp")
        n_cal = 100
        lo = 0.5 - 3 * stat.coverage_se
        hi = 0.5 + 1 / (n_cal + 1) + 3 * stat.coverage_se
        assert lo <= stat.coverage <= hi

    def test_replicate_failures_carry_the_index(self):
        # 500 percentile bins cannot be built from 100 calibration values
        cfg = self.make_tiny_config(
            methods=(MethodSpec("bccp-d-500", "bccp-d", n_bins=500),)
        )
        with pytest.raises(ConfigurationError, match="replicate 0"):
            run_replications(cfg)

    def test_duplicate_method_names_rejected(self):
        cfg = self.make_tiny_config(
            methods=(MethodSpec("scp", "scp"), MethodSpec("scp", "scp"))
        )
        with pytest.raises(ConfigurationError):
            run_replications(cfg)

    def test_reported_se_is_sd_of_replicate_metrics_over_sqrt_r(self):
        from binconformal.evaluation import _run_replicate

        cfg = self.make_tiny_config(replications=5)
        report = run_replications(cfg)
        per_rep = [
            _run_replicate(cfg, r)["scp"][AGGREGATE].coverage for r in range(5)
        ]
        assert report.get("scp").coverage == pytest.approx(np.mean(per_rep))
        assert report.get("scp").coverage_se == pytest.approx(
            np.std(per_rep, ddof=1) / np.sqrt(5)
        )

    def test_report_exposes_expected_cells(self):
        report = run_replications(self.make_tiny_config())
        assert report.methods == ("scp", "bccp-d-2")
        assert report.groups[0] == AGGREGATE
        assert set(report.groups[1:]) == {"Q1", "Q2", "Q3", "Q4"}
        stat = report.get("scp", "Q1")
        assert stat.n == 3 * 25
        assert 0.0 <= stat.coverage <= 1.0

    def test_presets_construct(self):
        t1 = lognormal_study(replications=2)
        assert t1.dgp == "lognormal" and t1.grouping == QUARTILES
        t2 = zicount_study(replications=2)
        assert t2.dgp == "zicount" and t2.grouping == (1.0,)
        assert t2.round_counts is False
