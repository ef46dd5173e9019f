"""Checker-to-CWE mappings: a known-mapping registry plus speculative inference.

The speculative method treats an alert landing on a manifest flaw line as
evidence that the alert's checker detects that flaw's CWE.  Evidence is
tallied per tool into a count table m[checker, cwe]; two normalizations of the
counts (checker-relative and CWE-relative match percentages) drive a
per-checker argmax assignment admitted against a threshold.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

from .errors import UndefinedRateError, ValidationError
from .ingest import RawAlert
from .suite import FlawRecord

KNOWN = "known"
SPECULATIVE = "speculative"

FORWARD = "forward"
BACKWARD = "backward"
COMBINED = "combined"
DIRECTIONS = (FORWARD, BACKWARD, COMBINED)

UNREVIEWED = "UNREVIEWED"
RELATIONSHIPS = ("EQUALS", "SUBSET_OF", "SUPERSET_OF", "PARTIALLY_OVERLAPPING", "WRONG")


@dataclass(frozen=True)
class CheckerMapping:
    """One checker-to-CWE association, known from a registry or inferred."""

    tool: str
    checker: str
    cwe: int
    provenance: str = KNOWN
    direction: str | None = None
    threshold: float | None = None
    match_pct: float | None = None


@dataclass(frozen=True)
class MappingRule:
    """A known-registry row; the checker column may be a regular expression."""

    tool: str
    checker_pattern: str
    is_regex: bool
    cwe: int


@dataclass
class MatchCountTable:
    """Per-tool checker-CWE co-occurrence counts with row/column totals."""

    tool: str
    counts: dict[tuple[str, int], int] = field(default_factory=dict)
    row_totals: dict[str, int] = field(default_factory=dict)
    col_totals: dict[int, int] = field(default_factory=dict)

    def checkers(self) -> list[str]:
        return sorted(self.row_totals)

    def cwes(self) -> list[int]:
        return sorted(self.col_totals)


def count_matches(alerts: list[RawAlert], flaws: list[FlawRecord]) -> MatchCountTable:
    """Count checker-CWE matches: one count per (alert, co-located flaw) pair.

    Duplicate identical alerts each count; evidence is weighted by alert
    multiplicity.  All alerts must come from a single tool.
    """
    tools = {a.tool for a in alerts}
    if len(tools) > 1:
        raise ValidationError(f"count_matches expects a single tool, got {sorted(tools)}")
    table = MatchCountTable(tool=tools.pop() if tools else "")

    by_location: dict[tuple[str, int], list[int]] = {}
    for flaw in flaws:
        by_location.setdefault((flaw.filepath, flaw.line), []).append(flaw.cwe)

    for alert in alerts:
        for cwe in by_location.get((alert.filepath, alert.line), ()):
            key = (alert.checker, cwe)
            table.counts[key] = table.counts.get(key, 0) + 1
            table.row_totals[alert.checker] = table.row_totals.get(alert.checker, 0) + 1
            table.col_totals[cwe] = table.col_totals.get(cwe, 0) + 1
    return table


def forward_pct(table: MatchCountTable, checker: str, cwe: int) -> float:
    """Checker-relative match percentage: 100 * m[checker, cwe] / m[checker]."""
    m_i = table.row_totals.get(checker, 0)
    if m_i == 0:
        raise UndefinedRateError(f"checker {checker!r} has no matches; forward rate undefined")
    return 100.0 * table.counts.get((checker, cwe), 0) / m_i


def backward_pct(table: MatchCountTable, checker: str, cwe: int) -> float:
    """CWE-relative match percentage: 100 * m[checker, cwe] / m[cwe]."""
    m_j = table.col_totals.get(cwe, 0)
    if m_j == 0:
        raise UndefinedRateError(f"CWE {cwe} has no matches; backward rate undefined")
    return 100.0 * table.counts.get((checker, cwe), 0) / m_j


def combined_pct(table: MatchCountTable, checker: str, cwe: int) -> float:
    """Mean of the forward and backward percentages (experimental formula)."""
    return 0.5 * forward_pct(table, checker, cwe) + 0.5 * backward_pct(table, checker, cwe)


_RATE_FN = {FORWARD: forward_pct, BACKWARD: backward_pct, COMBINED: combined_pct}


def speculate(table: MatchCountTable, direction: str, threshold: float) -> list[CheckerMapping]:
    """Infer speculative mappings from a count table.

    Per checker, the preliminary CWE is the argmax of the chosen rate, ties
    broken toward the smaller CWE number.  A preliminary pair is admitted when
    its rate is >= threshold; at threshold 0 the rate must be positive so that
    zero-evidence pairs never map.
    """
    if direction not in _RATE_FN:
        raise ValidationError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    if not 0.0 <= threshold <= 100.0:
        raise ValidationError(f"threshold must be in [0, 100], got {threshold}")
    rate = _RATE_FN[direction]

    mappings = []
    for checker in table.checkers():
        best_cwe = None
        best_rate = 0.0
        candidates = sorted(cwe for (c, cwe) in table.counts if c == checker)
        for cwe in candidates:
            r = rate(table, checker, cwe)
            if best_cwe is None or r > best_rate:
                best_cwe, best_rate = cwe, r
        if best_cwe is None:
            continue
        admitted = best_rate >= threshold if threshold > 0 else best_rate > 0
        if admitted:
            mappings.append(
                CheckerMapping(
                    tool=table.tool,
                    checker=checker,
                    cwe=best_cwe,
                    provenance=SPECULATIVE,
                    direction=direction,
                    threshold=threshold,
                    match_pct=best_rate,
                )
            )
    return mappings


@dataclass(frozen=True)
class ReviewRow:
    tool: str
    checker: str
    cwe: int
    direction: str
    threshold: float
    match_pct: float
    m_ij: int
    m_i: int
    m_j: int
    forward_pct: float
    backward_pct: float
    relationship: str = UNREVIEWED


@dataclass
class ReviewReport:
    rows: list[ReviewRow]
    candidate_count: int
    all_pairs_count: int


def mapping_review_report(candidates: list[CheckerMapping], table: MatchCountTable) -> ReviewReport:
    """Lay out candidate mappings with their evidence for manual review.

    ``all_pairs_count`` is |checkers| * |CWEs with evidence|, the number of
    combinations a reviewer would face without speculation; comparing it to
    ``candidate_count`` is the effort-reduction statistic.
    """
    rows = []
    for cand in candidates:
        rows.append(
            ReviewRow(
                tool=cand.tool,
                checker=cand.checker,
                cwe=cand.cwe,
                direction=cand.direction or "",
                threshold=cand.threshold if cand.threshold is not None else 0.0,
                match_pct=cand.match_pct if cand.match_pct is not None else 0.0,
                m_ij=table.counts.get((cand.checker, cand.cwe), 0),
                m_i=table.row_totals.get(cand.checker, 0),
                m_j=table.col_totals.get(cand.cwe, 0),
                forward_pct=forward_pct(table, cand.checker, cand.cwe),
                backward_pct=backward_pct(table, cand.checker, cand.cwe),
            )
        )
    return ReviewReport(
        rows=rows,
        candidate_count=len(rows),
        all_pairs_count=len(table.row_totals) * len(table.col_totals),
    )


def resolve_known(rules: list[MappingRule], alerts: list[RawAlert]) -> list[CheckerMapping]:
    """Resolve registry rules against the (tool, checker) pairs seen in alerts.

    Regex rules must match the whole checkerID.  Returns concrete known
    mappings, deduplicated and sorted.
    """
    pairs = sorted({(a.tool, a.checker) for a in alerts})
    compiled = [(r, re.compile(r.checker_pattern) if r.is_regex else None) for r in rules]
    resolved = set()
    for tool, checker in pairs:
        for rule, pattern in compiled:
            if rule.tool != tool:
                continue
            if pattern.fullmatch(checker) if pattern else rule.checker_pattern == checker:
                resolved.add(CheckerMapping(tool=tool, checker=checker, cwe=rule.cwe, provenance=KNOWN))
    return sorted(resolved, key=lambda m: (m.tool, m.checker, m.cwe))


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------

KNOWN_CSV_HEADER = ["tool", "checker_pattern", "is_regex", "cwe"]
SPECULATIVE_CSV_HEADER = ["tool", "checker", "cwe", "direction", "threshold", "match_pct", "m_ij", "m_i", "m_j"]
REVIEW_CSV_HEADER = SPECULATIVE_CSV_HEADER + ["forward_pct", "backward_pct", "relationship"]


def load_known_csv(document: str) -> list[MappingRule]:
    rules = []
    reader = csv.DictReader(io.StringIO(document))
    for lineno, row in enumerate(reader, start=2):
        try:
            rules.append(
                MappingRule(
                    tool=row["tool"],
                    checker_pattern=row["checker_pattern"],
                    is_regex=row["is_regex"].strip() == "1",
                    cwe=int(row["cwe"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"known-mappings CSV row {lineno}: {exc}") from exc
    return rules


def known_to_csv(rules: list[MappingRule]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(KNOWN_CSV_HEADER)
    for r in rules:
        writer.writerow([r.tool, r.checker_pattern, int(r.is_regex), r.cwe])
    return out.getvalue()


def speculative_to_csv(mappings: list[CheckerMapping], tables: dict[str, MatchCountTable]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SPECULATIVE_CSV_HEADER)
    for m in mappings:
        table = tables[m.tool]
        writer.writerow(
            [
                m.tool,
                m.checker,
                m.cwe,
                m.direction,
                repr(float(m.threshold)),
                repr(float(m.match_pct)),
                table.counts.get((m.checker, m.cwe), 0),
                table.row_totals.get(m.checker, 0),
                table.col_totals.get(m.cwe, 0),
            ]
        )
    return out.getvalue()


def load_speculative_csv(document: str) -> list[CheckerMapping]:
    mappings = []
    reader = csv.DictReader(io.StringIO(document))
    for lineno, row in enumerate(reader, start=2):
        try:
            mappings.append(
                CheckerMapping(
                    tool=row["tool"],
                    checker=row["checker"],
                    cwe=int(row["cwe"]),
                    provenance=SPECULATIVE,
                    direction=row["direction"],
                    threshold=float(row["threshold"]),
                    match_pct=float(row["match_pct"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"speculative-mappings CSV row {lineno}: {exc}") from exc
    return mappings


def review_to_csv(report: ReviewReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REVIEW_CSV_HEADER)
    for r in report.rows:
        writer.writerow(
            [
                r.tool,
                r.checker,
                r.cwe,
                r.direction,
                repr(float(r.threshold)),
                repr(float(r.match_pct)),
                r.m_ij,
                r.m_i,
                r.m_j,
                repr(float(r.forward_pct)),
                repr(float(r.backward_pct)),
                r.relationship,
            ]
        )
    return out.getvalue()


def load_review_csv(document: str) -> list[ReviewRow]:
    rows = []
    reader = csv.DictReader(io.StringIO(document))
    for lineno, row in enumerate(reader, start=2):
        relationship = row.get("relationship", UNREVIEWED).strip() or UNREVIEWED
        if relationship not in RELATIONSHIPS and relationship != UNREVIEWED:
            raise ValidationError(
                f"review CSV row {lineno}: relationship {relationship!r} not in {RELATIONSHIPS}"
            )
        try:
            rows.append(
                ReviewRow(
                    tool=row["tool"],
                    checker=row["checker"],
                    cwe=int(row["cwe"]),
                    direction=row["direction"],
                    threshold=float(row["threshold"]),
                    match_pct=float(row["match_pct"]),
                    m_ij=int(row["m_ij"]),
                    m_i=int(row["m_i"]),
                    m_j=int(row["m_j"]),
                    forward_pct=float(row["forward_pct"]),
                    backward_pct=float(row["backward_pct"]),
                    relationship=relationship,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"review CSV row {lineno}: {exc}") from exc
    return rows


def promote_reviewed(rows: list[ReviewRow]) -> list[MappingRule]:
    """Turn human-verified review rows into known-registry rules.

    Rows whose relationship confirms a real overlap (anything except WRONG or
    UNREVIEWED) are promoted.
    """
    promoted = []
    for row in rows:
        if row.relationship in RELATIONSHIPS and row.relationship != "WRONG":
            promoted.append(MappingRule(tool=row.tool, checker_pattern=row.checker, is_regex=False, cwe=row.cwe))
    return promoted
