import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import oracles
from harim.errors import DegenerateStatError, JoinError, ValidationError
from harim.meta import (
    CorrelationReport,
    metric_metric_matrix,
    parse_split,
    perm_input_test,
    segment_correlation,
    significance_grid,
    system_correlation,
    system_means,
)
from harim.records import AnnotatedPair, ScoreTable


def make_pairs(values, criterion="factuality", systems=None, kinds=None):
    pairs = []
    for i, value in enumerate(values):
        pairs.append(
            AnnotatedPair(
                id=f"e{i}",
                article="a b c",
                summary="a b",
                system=systems[i] if systems else "sys1",
                kind=kinds[i] if kinds else "unknown",
                judgments={criterion: value},
            )
        )
    return pairs


def table_for(pairs, values, name="m"):
    return ScoreTable(name, {p.id: v for p, v in zip(pairs, values)})


class TestSegment:
    def test_identity_and_negation(self):
        pairs = make_pairs([0.1, 0.5, 0.9, 0.3])
        same = table_for(pairs, [0.1, 0.5, 0.9, 0.3])
        flipped = table_for(pairs, [-0.1, -0.5, -0.9, -0.3])
        for coefficient in ("kendall_tau", "spearman_r", "pearson_rho"):
            assert segment_correlation(same, pairs, "factuality", coefficient).value == 1.0
            assert segment_correlation(flipped, pairs, "factuality", coefficient).value == -1.0

    def test_order_invariance(self):
        pairs = make_pairs([0.1, 0.5, 0.9, 0.3, 0.7])
        table = table_for(pairs, [1.0, 3.0, 2.0, 5.0, 4.0])
        forward = segment_correlation(table, pairs, "factuality", "pearson_rho")
        backward = segment_correlation(table, list(reversed(pairs)), "factuality", "pearson_rho")
        assert forward.value == backward.value

    def test_split_filters_pairs(self):
        kinds = ["abstractive", "extractive", "abstractive", "extractive", "abstractive"]
        pairs = make_pairs([0.1, 0.2, 0.5, 0.4, 0.9], kinds=kinds)
        table = table_for(pairs, [1.0, 9.0, 2.0, 8.0, 3.0])
        report = segment_correlation(table, pairs, "factuality", split="kind=abstractive")
        assert report.n == 3
        assert report.split == "kind=abstractive"
        assert report.value == 1.0

    def test_missing_id_is_join_error(self):
        pairs = make_pairs([0.1, 0.5, 0.9])
        table = ScoreTable("m", {"e0": 1.0, "e1": 2.0})
        with pytest.raises(JoinError, match="'e2'"):
            segment_correlation(table, pairs, "factuality")

    def test_missing_criterion_named(self):
        pairs = make_pairs([0.1, 0.5, 0.9])
        table = table_for(pairs, [1.0, 2.0, 3.0])
        with pytest.raises(ValidationError, match="coherence"):
            segment_correlation(table, pairs, "coherence")

    def test_empty_split_is_error(self):
        pairs = make_pairs([0.1, 0.5], kinds=["abstractive", "abstractive"])
        table = table_for(pairs, [1.0, 2.0])
        with pytest.raises(ValidationError, match="no pairs left"):
            segment_correlation(table, pairs, "factuality", split="kind=extractive")

    def test_fixture_tau_matches_brute_force(self, fixture_pairs):
        from harim.engine import score_batch

        here = sorted(fixture_pairs, key=lambda p: p.id)
        table = ScoreTable("m", {p.id: float(len(p.summary)) for p in here})
        report = segment_correlation(table, fixture_pairs, "relevance")
        expected = oracles.kendall_tau(
            [table.scores[p.id] for p in here], [p.judgments["relevance"] for p in here]
        )
        assert report.value == expected


class TestSystem:
    def test_two_systems_ordered_identically(self):
        systems = ["s1", "s1", "s2", "s2"]
        pairs = make_pairs([0.1, 0.2, 0.8, 0.9], systems=systems)
        table = table_for(pairs, [1.0, 2.0, 8.0, 9.0])
        report = system_correlation(table, pairs, "factuality")
        assert report.value == 1.0
        assert report.n == 2
        assert report.level == "system"

    def test_means_match_independent_aggregation(self, fixture_pairs):
        table = ScoreTable("m", {p.id: float(i) for i, p in enumerate(fixture_pairs)})
        systems, metric_means, human_means = system_means(table, fixture_pairs, "fluency")
        for name, mm, hm in zip(systems, metric_means, human_means):
            group = [p for p in fixture_pairs if p.system == name]
            assert_allclose(mm, sum(table.scores[p.id] for p in group) / len(group), atol=1e-12)
            assert_allclose(hm, sum(p.judgments["fluency"] for p in group) / len(group), atol=1e-12)

    def test_within_system_order_cannot_matter(self):
        # fsum means are exactly rounded, so any ordering gives identical floats
        values = [0.1, 0.3, 0.7, 0.2, 0.9, 0.4]
        systems = ["s1", "s1", "s1", "s2", "s2", "s2"]
        pairs = make_pairs(values, systems=systems)
        table = table_for(pairs, [5.0, 1.0, 3.0, 2.0, 4.0, 6.0])
        base = system_correlation(table, pairs, "factuality", "pearson_rho")
        rng = np.random.default_rng(0)
        for _ in range(5):
            shuffled = list(pairs)
            rng.shuffle(shuffled)
            assert system_correlation(table, shuffled, "factuality", "pearson_rho").value == base.value

    def test_single_system_rejected(self):
        pairs = make_pairs([0.1, 0.9])
        table = table_for(pairs, [1.0, 2.0])
        with pytest.raises(ValidationError, match="2 systems"):
            system_correlation(table, pairs, "factuality")


class TestMatrix:
    def test_single_table(self):
        table = ScoreTable("m", {"a": 1.0, "b": 2.0})
        names, ids, matrix = metric_metric_matrix([table])
        assert names == ("m",)
        assert matrix == [[1.0]]

    def test_negation_gives_minus_one(self):
        t1 = ScoreTable("m1", {"a": 1.0, "b": 2.0, "c": 3.0})
        t2 = ScoreTable("m2", {"a": -1.0, "b": -2.0, "c": -3.0})
        _, ids, matrix = metric_metric_matrix([t1, t2])
        assert ids == ("a", "b", "c")
        assert matrix[0][1] == matrix[1][0] == -1.0
        assert matrix[0][0] == matrix[1][1] == 1.0

    def test_matches_elementwise_calls(self):
        rng = np.random.default_rng(8)
        ids = [f"i{k}" for k in range(20)]
        tables = [
            ScoreTable(f"m{t}", dict(zip(ids, rng.normal(size=20)))) for t in range(3)
        ]
        names, shared, matrix = metric_metric_matrix(tables, "spearman_r")
        from harim.stats import spearman_r

        for i in range(3):
            for j in range(3):
                if i == j:
                    assert matrix[i][j] == 1.0
                else:
                    vi = [tables[i].scores[s] for s in shared]
                    vj = [tables[j].scores[s] for s in shared]
                    assert matrix[i][j] == spearman_r(vi, vj)

    def test_intersection_used(self):
        t1 = ScoreTable("m1", {"a": 1.0, "b": 2.0, "c": 3.0})
        t2 = ScoreTable("m2", {"b": 5.0, "c": 4.0, "d": 0.0})
        _, shared, _ = metric_metric_matrix([t1, t2])
        assert shared == ("b", "c")

    def test_empty_intersection(self):
        t1 = ScoreTable("m1", {"a": 1.0})
        t2 = ScoreTable("m2", {"b": 1.0})
        with pytest.raises(JoinError):
            metric_metric_matrix([t1, t2])


class TestPermTest:
    def test_equal_tables_give_p_one(self):
        pairs = make_pairs([0.1, 0.4, 0.6, 0.9, 0.2])
        table = table_for(pairs, [1.0, 2.0, 3.0, 4.0, 5.0])
        result = perm_input_test(table, table, pairs, "factuality", n_permutations=50, seed=3)
        assert result.p_value == 1.0
        assert result.observed_gap == 0.0

    def test_determinism(self):
        rng = np.random.default_rng(14)
        pairs = make_pairs(list(rng.uniform(0, 1, 12)))
        a = table_for(pairs, list(rng.normal(size=12)), "a")
        b = table_for(pairs, list(rng.normal(size=12)), "b")
        first = perm_input_test(a, b, pairs, "factuality", n_permutations=80, seed=99)
        second = perm_input_test(a, b, pairs, "factuality", n_permutations=80, seed=99)
        assert first == second

    def test_different_seeds_usually_differ(self):
        rng = np.random.default_rng(15)
        pairs = make_pairs(list(rng.uniform(0, 1, 12)))
        a = table_for(pairs, list(rng.normal(size=12)), "a")
        b = table_for(pairs, list(rng.normal(size=12)), "b")
        results = {
            perm_input_test(a, b, pairs, "factuality", n_permutations=200, seed=s).p_value
            for s in range(4)
        }
        assert len(results) > 1

    def test_degenerate_rounds_resampled(self):
        # swapping only one of the two examples makes a metric side constant;
        # such rounds must be redrawn, not crash and not bias the count
        pairs = make_pairs([0.1, 0.9])
        a = table_for(pairs, [1.0, 2.0], "a")
        b = table_for(pairs, [2.0, 1.0], "b")
        result = perm_input_test(a, b, pairs, "factuality", n_permutations=40, seed=1)
        assert 0.0 < result.p_value <= 1.0

    def test_degenerate_observation_propagates(self):
        pairs = make_pairs([0.1, 0.9, 0.5])
        constant = table_for(pairs, [1.0, 1.0, 1.0], "const")
        other = table_for(pairs, [1.0, 2.0, 3.0], "m")
        with pytest.raises(DegenerateStatError):
            perm_input_test(constant, other, pairs, "factuality", n_permutations=10, seed=0)

    def test_obvious_gap_is_significant(self):
        h = list(range(30))
        pairs = make_pairs([v / 29.0 for v in h])
        a = table_for(pairs, [float(v) for v in h], "good")
        b = table_for(pairs, [float(-v) for v in h], "bad")
        result = perm_input_test(a, b, pairs, "factuality", n_permutations=500, seed=0)
        assert result.observed_gap == 2.0
        assert result.p_value < 0.05


class TestGrid:
    def make_inputs(self):
        rng = np.random.default_rng(31)
        h = list(rng.uniform(0, 1, 16))
        pairs = make_pairs(h)
        strong = table_for(pairs, [v + rng.normal(0, 0.01) for v in h], "strong")
        noise1 = table_for(pairs, list(rng.normal(size=16)), "noise1")
        noise2 = table_for(pairs, list(rng.normal(size=16)), "noise2")
        return pairs, [strong, noise1, noise2]

    def test_symmetric_zero_diagonal(self):
        pairs, tables = self.make_inputs()
        grid = significance_grid(tables, pairs, "factuality", n_permutations=100, seed=5)
        k = len(tables)
        for i in range(k):
            assert grid.significant[i][i] == 0
            assert grid.p_values[i][i] == 1.0
            for j in range(k):
                assert grid.significant[i][j] == grid.significant[j][i]
                assert grid.p_values[i][j] == grid.p_values[j][i]
        assert set(v for row in grid.significant for v in row) <= {0, 1}

    def test_deterministic(self):
        pairs, tables = self.make_inputs()
        one = significance_grid(tables, pairs, "factuality", n_permutations=60, seed=2)
        two = significance_grid(tables, pairs, "factuality", n_permutations=60, seed=2)
        assert one == two

    def test_needs_two_tables(self):
        pairs, tables = self.make_inputs()
        with pytest.raises(ValidationError):
            significance_grid(tables[:1], pairs, "factuality", n_permutations=10, seed=0)


class TestSplitsAndReports:
    def test_parse_split_forms(self):
        descriptor, keep = parse_split("system=sys2")
        pair = make_pairs([0.5], systems=["sys2"])[0]
        assert descriptor == "system=sys2"
        assert keep(pair)
        assert parse_split(None)[0] is None

    def test_parse_split_rejects_junk(self):
        with pytest.raises(ValidationError):
            parse_split("abstractive")
        with pytest.raises(ValidationError):
            parse_split("kind=poetic")
        with pytest.raises(ValidationError):
            parse_split("judge=alice")

    def test_report_invariants(self):
        with pytest.raises(ValidationError):
            CorrelationReport("m", "factuality", "segment", None, "kendall_tau", 1.5, 10)
        with pytest.raises(ValidationError):
            CorrelationReport("m", "factuality", "corpus", None, "kendall_tau", 0.5, 10)
        with pytest.raises(ValidationError):
            CorrelationReport("m", "factuality", "segment", None, "kendall_tau", 0.5, 1)

    def test_duplicate_pair_ids_rejected(self):
        pairs = make_pairs([0.1, 0.9]) + make_pairs([0.5])
        table = ScoreTable("m", {p.id: 1.0 for p in pairs})
        with pytest.raises(ValidationError, match="duplicate"):
            segment_correlation(table, pairs, "factuality")
