import csv
import math
import os

import numpy as np
import pytest

from hapref.analysis import (
    ParticipantResult,
    aggregate_stats,
    five_number_summary,
    mean_absolute_difference,
    pearson_r,
    report,
    spearman_rho,
)


class TestPearson:
    def test_identical_vectors(self):
        x = np.array([-3.0, 0.0, 3.0, 1.0])
        assert pearson_r(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_negated_vector(self):
        x = np.array([-3.0, 0.0, 3.0, 1.0, -1.0])
        assert pearson_r(x, -x) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_value(self):
        # longhand: sum(xy)=19.5 with x centered; sum(x^2)=20;
        # after mean .06, sum((y-.06)^2)=19.232 -> r = 19.5/sqrt(20*19.232)
        before = [-3.0, 0.0, 3.0, 1.0, -1.0]
        after = [-2.8, 0.4, 3.0, 0.9, -1.2]
        expected = 19.5 / math.sqrt(20.0 * 19.232)
        assert pearson_r(before, after) == pytest.approx(expected, abs=1e-12)

    def test_matches_scipy(self):
        from scipy.stats import pearsonr

        rng = np.random.default_rng(4)
        for _ in range(20):
            x = rng.normal(0, 1, 15)
            y = rng.normal(0, 1, 15)
            assert pearson_r(x, y) == pytest.approx(pearsonr(x, y).statistic, abs=1e-12)

    def test_affine_invariance(self):
        rng = np.random.default_rng(9)
        x = rng.normal(0, 1, 15)
        y = rng.normal(0, 1, 15)
        base = pearson_r(x, y)
        assert pearson_r(2.5 * x + 7, y) == pytest.approx(base, abs=1e-9)
        assert pearson_r(x, 0.1 * y - 3) == pytest.approx(base, abs=1e-9)

    def test_constant_vector_rejected(self):
        with pytest.raises(ValueError):
            pearson_r([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pearson_r([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_spearman_option(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert spearman_rho(x, [10.0, 20.0, 25.0, 70.0]) == pytest.approx(1.0)


class TestMeanAbsoluteDifference:
    def test_identical(self):
        assert mean_absolute_difference([1.0, -2.0], [1.0, -2.0]) == 0.0

    def test_symmetric_unit_offsets(self):
        assert mean_absolute_difference([0.0, 0.0], [1.0, -1.0]) == 1.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, 15)
        y = rng.normal(0, 1, 15)
        perm = rng.permutation(15)
        assert mean_absolute_difference(x[perm], y[perm]) == pytest.approx(
            mean_absolute_difference(x, y))

    def test_zero_iff_equal(self):
        x = np.array([0.5, -0.5, 1.0])
        y = x.copy()
        assert mean_absolute_difference(x, y) == 0.0
        y[1] += 1e-9
        assert mean_absolute_difference(x, y) > 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mean_absolute_difference([1.0], [1.0, 2.0])


def make_result(pid, before, after):
    return ParticipantResult.from_vectors(pid, before, after)


class TestAggregate:
    def test_identical_participants_zero_sd(self):
        after = np.linspace(-3, 3, 15)
        before = np.arange(15) % 7 - 3.0
        results = [make_result("a", before, after), make_result("b", before, after)]
        means, sds = aggregate_stats(results)
        assert np.allclose(means, after)
        assert np.allclose(sds, 0.0)

    def test_opposite_extremes(self):
        before = np.arange(15) % 7 - 3.0
        up = np.full(15, 3.0)
        up[0] = -3.0  # keep non-constant for the correlation
        down = -up
        results = [make_result("a", before, up), make_result("b", before, down)]
        means, sds = aggregate_stats(results)
        assert means[1] == pytest.approx(0.0)
        assert sds[1] == pytest.approx(math.sqrt(18.0))  # sample sd of {+3, -3}

    def test_single_participant_sd_absent(self):
        before = np.arange(15) % 7 - 3.0
        results = [make_result("solo", before, np.linspace(-3, 3, 15))]
        means, sds = aggregate_stats(results)
        assert sds is None

    def test_means_bounded(self):
        rng = np.random.default_rng(7)
        results = [make_result(str(k), rng.integers(-3, 4, 15).astype(float),
                               rng.uniform(-3, 3, 15)) for k in range(6)]
        means, _ = aggregate_stats(results)
        assert np.all(means >= -3.0) and np.all(means <= 3.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_stats([])


class TestFiveNumberSummary:
    def test_manual_small_set(self):
        summary = five_number_summary([2.0, 0.0, 1.0, 4.0])
        assert summary["min"] == 0.0 and summary["max"] == 4.0
        assert summary["median"] == pytest.approx(1.5)
        assert summary["q1"] == pytest.approx(0.75)
        assert summary["q3"] == pytest.approx(2.5)


class TestReport:
    def sample_results(self, n=3):
        rng = np.random.default_rng(0)
        results = []
        for k in range(n):
            before = rng.integers(-3, 4, 15).astype(float)
            after = np.clip(before + rng.normal(0, 0.5, 15), -3, 3)
            if np.ptp(before) == 0:
                before[0] = -3.0
            results.append(make_result(f"p{k}", before, after))
        return results

    def test_csv_outputs(self, tmp_path):
        results = self.sample_results()
        written = report(results, str(tmp_path / "out"))
        names = {os.path.basename(p) for p in written}
        assert names == {"participants.csv", "before_after.csv",
                         "stimulus_stats.csv", "mad_summary.csv"}
        with open(tmp_path / "out" / "participants.csv", newline="") as fp:
            rows = list(csv.DictReader(fp))
        assert [r["participant_id"] for r in rows] == ["p0", "p1", "p2"]
        for row in rows:
            assert -1.0 <= float(row["r"]) <= 1.0
            assert float(row["mad"]) >= 0.0
        with open(tmp_path / "out" / "before_after.csv", newline="") as fp:
            assert len(list(csv.DictReader(fp))) == 45

    def test_single_participant_sd_blank(self, tmp_path):
        written = report(self.sample_results(1), str(tmp_path / "solo"))
        with open(tmp_path / "solo" / "stimulus_stats.csv", newline="") as fp:
            rows = list(csv.DictReader(fp))
        assert all(r["sd"] == "" for r in rows)

    def test_mad_summary_matches_manual(self, tmp_path):
        results = self.sample_results(2)
        report(results, str(tmp_path / "m"))
        with open(tmp_path / "m" / "mad_summary.csv", newline="") as fp:
            rows = list(csv.DictReader(fp))
        diffs = np.abs(results[0].before - results[0].after)
        assert float(rows[0]["min"]) == pytest.approx(diffs.min())
        assert float(rows[0]["max"]) == pytest.approx(diffs.max())

    def test_deterministic(self, tmp_path):
        results = self.sample_results()
        report(results, str(tmp_path / "a"))
        report(results, str(tmp_path / "b"))
        for name in ("participants.csv", "stimulus_stats.csv"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()

    def test_png_outputs(self, tmp_path):
        written = report(self.sample_results(), str(tmp_path / "plots"),
                         formats=("csv", "png"))
        pngs = [p for p in written if p.endswith(".png")]
        assert {os.path.basename(p) for p in pngs} == {
            "before_after.png", "mad_box.png", "stimulus_means.png"}
        assert all(os.path.getsize(p) > 0 for p in pngs)

    def test_empty_results_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            report([], str(tmp_path / "x"))

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            report(self.sample_results(), str(tmp_path / "x"), formats=("pdf",))
