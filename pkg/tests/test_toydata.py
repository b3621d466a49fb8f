"""Toy cohort generator: schema conformance and construction statistics."""

import numpy as np
import pytest

from seqaugment.cohort import load_cohort
from seqaugment.schema import hypotension_schema
from seqaugment.toydata import DISCRETE_PROBS, NUMERIC_PARAMS, make_toy_cohort, write_toy_csv


class TestCounts:
    def test_patient_counts_and_labels(self):
        cohort = make_toy_cohort(10, 4, seed=0)
        assert len(cohort) == 14
        assert cohort.n_majority == 10
        assert cohort.n_minority == 4

    def test_ids_are_unique_and_prefixed(self):
        cohort = make_toy_cohort(3, 2, seed=1)
        ids = cohort.patient_ids
        assert len(set(ids)) == 5
        assert sum(i.startswith("toy-maj-") for i in ids) == 3
        assert sum(i.startswith("toy-min-") for i in ids) == 2

    def test_deterministic(self):
        a = make_toy_cohort(4, 2, seed=9)
        b = make_toy_cohort(4, 2, seed=9)
        for pa, pb in zip(a.patients, b.patients):
            assert (pa.observations == pb.observations).all()


class TestSchemaConformance:
    def test_reingests_through_load_cohort(self, tmp_path):
        path = tmp_path / "toy.csv"
        write_toy_csv(path, 6, 3, seed=2)
        cohort = load_cohort(path, hypotension_schema())
        assert len(cohort) == 9
        assert cohort.n_minority == 3

    def test_csv_row_count(self, tmp_path):
        path = tmp_path / "toy.csv"
        write_toy_csv(path, 5, 2, seed=3)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 7 * 48  # header + patients * hours


class TestConstructionStatistics:
    @pytest.fixture(scope="class")
    def big_cohort(self):
        # >= 10^4 cells per class per variable
        return make_toy_cohort(220, 220, seed=77)

    def test_map_class_means_match_construction_within_1pct(self, big_cohort):
        p = NUMERIC_PARAMS["map"]
        majority = big_cohort.majority().column_values("map")
        minority = big_cohort.minority().column_values("map")
        assert majority.size >= 10_000 and minority.size >= 10_000
        gap = minority.mean() - majority.mean()
        assert gap == pytest.approx(p.class_gap, rel=0.01)
        assert majority.mean() == pytest.approx(p.class_mean(0), rel=0.01)
        assert minority.mean() == pytest.approx(p.class_mean(1), rel=0.01)

    def test_all_numeric_gaps_have_constructed_sign_and_size(self, big_cohort):
        for name, p in NUMERIC_PARAMS.items():
            majority = big_cohort.majority().column_values(name)
            minority = big_cohort.minority().column_values(name)
            gap = minority.mean() - majority.mean()
            assert np.sign(gap) == np.sign(p.class_gap), name
            assert gap == pytest.approx(p.class_gap, rel=0.02), name

    def test_discrete_class_distributions_shift(self, big_cohort):
        # minority class puts visibly more mass on the flagged state
        for name in ("urine_m", "gcs_m"):
            p0, p1 = DISCRETE_PROBS[name]
            majority = big_cohort.majority().column_values(name)
            minority = big_cohort.minority().column_values(name)
            rate0 = np.mean(majority == "1")
            rate1 = np.mean(minority == "1")
            assert rate0 == pytest.approx(p0[1], abs=0.03)
            assert rate1 == pytest.approx(p1[1], abs=0.03)
            assert rate1 > rate0

    @staticmethod
    def expected_correlation(a, b, label=0):
        """Construction-implied Pearson correlation of two numeric variables.

        Shared-factor term always contributes; the sinusoid cross-term only
        couples variables with equal periods (full cycles are orthogonal
        otherwise).
        """
        pa, pb = NUMERIC_PARAMS[a], NUMERIC_PARAMS[b]
        cov = pa.loading * pb.loading
        if pa.period == pb.period:
            phase_a = pa.phase1 if label else pa.phase0
            phase_b = pb.phase1 if label else pb.phase0
            cov += 0.5 * pa.amplitude * pb.amplitude * np.cos(phase_a - phase_b)

        def sd(p):
            return np.sqrt(p.amplitude**2 / 2 + p.loading**2 + p.noise**2)

        return cov / (sd(pa) * sd(pb))

    def test_correlations_match_construction_oracle(self, big_cohort):
        sub = big_cohort.majority()
        matrix = sub.value_matrix()
        schema = big_cohort.schema
        pairs = [("map", "systolic_bp"), ("map", "po2"), ("urine", "ast"),
                 ("diastolic_bp", "alt")]
        for a, b in pairs:
            i, j = schema.index_of(a), schema.index_of(b)
            got = np.corrcoef(matrix[:, i], matrix[:, j])[0, 1]
            want = self.expected_correlation(a, b)
            assert got == pytest.approx(want, abs=0.03), (a, b)

    def test_correlation_structure_nondegenerate(self, big_cohort):
        # the shared factor couples variables with positive and negative signs
        # (pairs with distinct periods, so only the factor term contributes)
        assert self.expected_correlation("map", "systolic_bp") > 0.2
        assert self.expected_correlation("systolic_bp", "diastolic_bp") < -0.2

    def test_values_respect_clamp_bounds(self, big_cohort):
        schema = big_cohort.schema
        for spec in schema.numeric_variables:
            col = big_cohort.column_values(spec.name)
            lo, hi = spec.numeric_range
            assert col.min() >= lo and col.max() <= hi
