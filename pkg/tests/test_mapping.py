import random

import pytest

from alertlab.errors import UndefinedRateError, ValidationError
from alertlab.ingest import RawAlert
from alertlab.mapping import (
    BACKWARD,
    COMBINED,
    FORWARD,
    KNOWN,
    SPECULATIVE,
    CheckerMapping,
    MappingRule,
    MatchCountTable,
    backward_pct,
    combined_pct,
    count_matches,
    forward_pct,
    known_to_csv,
    load_known_csv,
    load_review_csv,
    load_speculative_csv,
    mapping_review_report,
    promote_reviewed,
    resolve_known,
    review_to_csv,
    speculate,
    speculative_to_csv,
)
from alertlab.suite import FlawRecord


def table_from_counts(counts, tool="tool"):
    table = MatchCountTable(tool=tool)
    for (checker, cwe), n in counts.items():
        table.counts[(checker, cwe)] = n
        table.row_totals[checker] = table.row_totals.get(checker, 0) + n
        table.col_totals[cwe] = table.col_totals.get(cwe, 0) + n
    return table


def brute_force_counts(alerts, flaws):
    """Independent oracle: the double loop over all (alert, flaw) pairs."""
    counts = {}
    for alert in alerts:
        for flaw in flaws:
            if alert.filepath == flaw.filepath and alert.line == flaw.line:
                key = (alert.checker, flaw.cwe)
                counts[key] = counts.get(key, 0) + 1
    return counts


class TestCountMatches:
    def test_single_match(self):
        table = count_matches([RawAlert(0, "t", "CK", "f.c", 10)], [FlawRecord("f.c", 10, 121)])
        assert table.counts == {("CK", 121): 1}
        assert table.row_totals == {"CK": 1}
        assert table.col_totals == {121: 1}

    def test_alert_off_flaw_lines(self):
        table = count_matches([RawAlert(0, "t", "CK", "f.c", 11)], [FlawRecord("f.c", 10, 121)])
        assert table.counts == {}

    def test_bulk_counts_match_brute_force(self):
        flaws = [FlawRecord(f"a{i}.c", 10, 121) for i in range(30)] + [
            FlawRecord(f"b{i}.c", 20, 122) for i in range(10)
        ]
        alerts = [RawAlert(i, "t", "CK", f.filepath, f.line) for i, f in enumerate(flaws)]
        table = count_matches(alerts, flaws)
        assert table.counts == {("CK", 121): 30, ("CK", 122): 10}
        assert table.counts == brute_force_counts(alerts, flaws)

    def test_duplicate_alerts_each_count(self):
        alerts = [RawAlert(0, "t", "CK", "f.c", 10), RawAlert(1, "t", "CK", "f.c", 10)]
        table = count_matches(alerts, [FlawRecord("f.c", 10, 121)])
        assert table.counts[("CK", 121)] == 2

    def test_mixed_tools_rejected(self):
        alerts = [RawAlert(0, "t1", "CK", "f.c", 1), RawAlert(1, "t2", "CK", "f.c", 1)]
        with pytest.raises(ValidationError, match="single tool"):
            count_matches(alerts, [])

    def test_random_tables_match_brute_force(self):
        rng = random.Random(99)
        for _ in range(25):
            flaws = [
                FlawRecord(f"f{rng.randint(0, 5)}.c", rng.randint(1, 6), rng.choice([121, 122, 78]))
                for _ in range(rng.randint(0, 15))
            ]
            flaws = list(dict.fromkeys(flaws))  # manifest records are deduplicated
            alerts = [
                RawAlert(i, "t", f"CK{rng.randint(1, 3)}", f"f{rng.randint(0, 5)}.c", rng.randint(1, 6))
                for i in range(rng.randint(0, 20))
            ]
            assert count_matches(alerts, flaws).counts == brute_force_counts(alerts, flaws)


class TestRates:
    def test_forward_from_hand_arithmetic(self):
        table = table_from_counts({("CK", 121): 30, ("CK", 122): 10})
        assert forward_pct(table, "CK", 121) == 75.0

    def test_forward_single_cwe(self):
        table = table_from_counts({("CK", 121): 7})
        assert forward_pct(table, "CK", 121) == 100.0

    def test_forward_zero_numerator(self):
        table = table_from_counts({("CK", 122): 40})
        assert forward_pct(table, "CK", 121) == 0.0

    def test_forward_undefined(self):
        table = table_from_counts({("CK", 121): 1})
        with pytest.raises(UndefinedRateError):
            forward_pct(table, "OTHER", 121)

    def test_backward_from_hand_arithmetic(self):
        table = table_from_counts({("CK", 121): 30, ("CK2", 121): 30})
        assert backward_pct(table, "CK", 121) == 50.0

    def test_backward_only_checker(self):
        table = table_from_counts({("CK", 121): 3})
        assert backward_pct(table, "CK", 121) == 100.0

    def test_backward_undefined(self):
        table = table_from_counts({("CK", 121): 1})
        with pytest.raises(UndefinedRateError):
            backward_pct(table, "CK", 999)

    def test_combined_is_mean(self):
        # forward 75, backward 50 -> 62.5
        table = table_from_counts({("CK", 121): 30, ("CK", 122): 10, ("CK2", 121): 30})
        assert forward_pct(table, "CK", 121) == 75.0
        assert backward_pct(table, "CK", 121) == 50.0
        assert combined_pct(table, "CK", 121) == 62.5

    def test_combined_extremes(self):
        only = table_from_counts({("CK", 121): 5})
        assert combined_pct(only, "CK", 121) == 100.0
        zero = table_from_counts({("CK", 122): 5, ("CK2", 121): 5})
        assert combined_pct(zero, "CK", 121) == 0.0

    def test_forward_rows_sum_to_100(self):
        rng = random.Random(5)
        for _ in range(20):
            counts = {
                (f"CK{i}", cwe): rng.randint(1, 50)
                for i in range(3)
                for cwe in rng.sample([121, 122, 78, 190, 416], k=rng.randint(1, 4))
            }
            table = table_from_counts(counts)
            for checker in table.checkers():
                total = sum(forward_pct(table, checker, cwe) for cwe in table.cwes())
                assert abs(total - 100.0) < 1e-9

    def test_backward_columns_sum_to_100(self):
        rng = random.Random(6)
        for _ in range(20):
            counts = {
                (f"CK{i}", cwe): rng.randint(1, 50)
                for i in range(4)
                for cwe in rng.sample([121, 122, 78], k=rng.randint(1, 3))
            }
            table = table_from_counts(counts)
            for cwe in table.cwes():
                total = sum(backward_pct(table, checker, cwe) for checker in table.checkers())
                assert abs(total - 100.0) < 1e-9


class TestSpeculate:
    def test_threshold_passed(self):
        table = table_from_counts({("CK", 121): 30, ("CK", 122): 10})
        result = speculate(table, FORWARD, 50.0)
        assert len(result) == 1
        mapping = result[0]
        assert (mapping.checker, mapping.cwe, mapping.match_pct) == ("CK", 121, 75.0)
        assert mapping.provenance == SPECULATIVE
        assert mapping.direction == FORWARD
        assert mapping.threshold == 50.0

    def test_threshold_blocks(self):
        table = table_from_counts({("CK", 121): 30, ("CK", 122): 10})
        assert speculate(table, FORWARD, 80.0) == []

    def test_tie_breaks_to_smaller_cwe(self):
        table = table_from_counts({("CK", 122): 5, ("CK", 121): 5})
        result = speculate(table, FORWARD, 0.0)
        assert [m.cwe for m in result] == [121]

    def test_monotone_in_threshold(self):
        rng = random.Random(11)
        for _ in range(20):
            counts = {
                (f"CK{i}", cwe): rng.randint(1, 40)
                for i in range(3)
                for cwe in rng.sample([121, 122, 78, 190], k=rng.randint(1, 4))
            }
            table = table_from_counts(counts)
            for direction in (FORWARD, BACKWARD, COMBINED):
                previous = None
                for threshold in (0.0, 10.0, 30.0, 60.0, 90.0, 100.0):
                    current = {(m.checker, m.cwe) for m in speculate(table, direction, threshold)}
                    if previous is not None:
                        assert current <= previous
                    previous = current

    def test_row_scaling_keeps_forward_argmax(self):
        rng = random.Random(12)
        counts = {("CK", 121): 30, ("CK", 122): 10, ("CK2", 122): 9}
        base = speculate(table_from_counts(counts), FORWARD, 0.0)
        for factor in (2, 5, 17):
            scaled = dict(counts)
            for key in list(scaled):
                if key[0] == "CK":
                    scaled[key] = scaled[key] * factor
            result = speculate(table_from_counts(scaled), FORWARD, 0.0)
            assert {(m.checker, m.cwe) for m in result} == {(m.checker, m.cwe) for m in base}
        del rng

    def test_deterministic(self):
        table = table_from_counts({("CK", 121): 3, ("CK2", 78): 4, ("CK", 122): 3})
        assert speculate(table, FORWARD, 0.0) == speculate(table, FORWARD, 0.0)

    def test_bad_direction_rejected(self):
        with pytest.raises(ValidationError):
            speculate(table_from_counts({}), "sideways", 10.0)

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValidationError):
            speculate(table_from_counts({}), FORWARD, 101.0)


class TestReviewReport:
    def test_counting(self):
        counts = {("CK", 121): 1, ("CK", 122): 1, ("CK", 78): 1, ("CK2", 190): 1}
        table = table_from_counts(counts)
        candidates = speculate(table, FORWARD, 90.0)  # only CK2 -> 190 clears 90%
        report = mapping_review_report(candidates, table)
        assert report.candidate_count == 1
        assert report.all_pairs_count == 2 * 4

    def test_empty(self):
        report = mapping_review_report([], table_from_counts({}))
        assert report.rows == []
        assert report.candidate_count == 0
        assert report.all_pairs_count == 0

    def test_row_per_candidate(self):
        counts = {(f"CK{i}", 121 + i): 10 for i in range(3)}
        table = table_from_counts(counts)
        candidates = speculate(table, FORWARD, 0.0)
        report = mapping_review_report(candidates, table)
        assert len(report.rows) == 3
        for row in report.rows:
            assert row.relationship == "UNREVIEWED"
            assert row.m_i == 10 and row.m_ij == 10

    def test_csv_round_trip_and_promotion(self):
        counts = {("CK", 121): 8, ("CK", 122): 2}
        table = table_from_counts(counts)
        report = mapping_review_report(speculate(table, FORWARD, 0.0), table)
        text = review_to_csv(report)
        rows = load_review_csv(text)
        assert rows[0].m_ij == 8 and rows[0].forward_pct == 80.0
        assert promote_reviewed(rows) == []  # unreviewed rows never promote

        reviewed = text.replace("UNREVIEWED", "EQUALS")
        promoted = promote_reviewed(load_review_csv(reviewed))
        assert promoted == [MappingRule(tool="tool", checker_pattern="CK", is_regex=False, cwe=121)]

        wrong = text.replace("UNREVIEWED", "WRONG")
        assert promote_reviewed(load_review_csv(wrong)) == []

    def test_bad_relationship_rejected(self):
        counts = {("CK", 121): 8}
        table = table_from_counts(counts)
        text = review_to_csv(mapping_review_report(speculate(table, FORWARD, 0.0), table))
        with pytest.raises(ValidationError, match="relationship"):
            load_review_csv(text.replace("UNREVIEWED", "MAYBE"))


class TestKnownRegistry:
    def test_exact_and_regex_resolution(self):
        rules = [
            MappingRule("gcc", "-Warray-bounds", is_regex=False, cwe=121),
            MappingRule("gcc", r"-Wformat.*", is_regex=True, cwe=134),
        ]
        alerts = [
            RawAlert(0, "gcc", "-Warray-bounds", "f.c", 1),
            RawAlert(1, "gcc", "-Wformat-security", "f.c", 2),
            RawAlert(2, "gcc", "x-Wformat-security", "f.c", 3),  # regex must match whole id
            RawAlert(3, "clang", "-Warray-bounds", "f.c", 4),  # wrong tool
        ]
        resolved = resolve_known(rules, alerts)
        assert resolved == [
            CheckerMapping("gcc", "-Warray-bounds", 121, KNOWN),
            CheckerMapping("gcc", "-Wformat-security", 134, KNOWN),
        ]

    def test_known_csv_round_trip(self):
        rules = [
            MappingRule("gcc", r"-Wformat.*", is_regex=True, cwe=134),
            MappingRule("cppcheck", "arrayIndexOutOfBounds", is_regex=False, cwe=788),
        ]
        assert load_known_csv(known_to_csv(rules)) == rules

    def test_speculative_csv_round_trip(self):
        table = table_from_counts({("CK", 121): 30, ("CK", 122): 10})
        candidates = speculate(table, FORWARD, 50.0)
        text = speculative_to_csv(candidates, {"tool": table})
        loaded = load_speculative_csv(text)
        assert loaded == candidates
