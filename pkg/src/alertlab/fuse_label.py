"""Alert fusion and ground-truth verdict derivation.

Raw alerts whose checkers map to CWEs are unified per (CWE, file, line) key;
each fused alert then receives a verdict from the suite metadata:

* True when the manifest records a flaw with the same filepath, line and CWE;
* otherwise False when the line lies inside a GOOD-marked function span whose
  CWE matches the alert's;
* otherwise Unknown -- the labeler abstains rather than guess, in particular
  for alerts inside BAD functions whose line does not match the manifest.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace

from .errors import ValidationError
from .ingest import RawAlert
from .mapping import KNOWN, SPECULATIVE, CheckerMapping
from .suite import GOOD, FlawRecord, FunctionSpan

VERDICT_TRUE = "True"
VERDICT_FALSE = "False"
VERDICT_UNKNOWN = "Unknown"
VERDICTS = (VERDICT_TRUE, VERDICT_FALSE, VERDICT_UNKNOWN)


@dataclass(frozen=True, order=True)
class Contributor:
    tool: str
    checker: str
    alert_id: int
    provenance: str


@dataclass(frozen=True)
class FusedAlert:
    """Unification of co-located alerts mapped to the same CWE."""

    fused_id: int
    cwe: int
    filepath: str
    line: int
    contributors: tuple[Contributor, ...]
    verdict: str = VERDICT_UNKNOWN

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.cwe, self.filepath, self.line)

    def tools(self) -> list[str]:
        return sorted({c.tool for c in self.contributors})

    def provenance(self) -> str:
        kinds = {c.provenance for c in self.contributors}
        if kinds == {KNOWN}:
            return KNOWN
        if kinds == {SPECULATIVE}:
            return SPECULATIVE
        return "mixed"


@dataclass
class FuseResult:
    fused: list[FusedAlert]
    excluded: int


@dataclass(frozen=True)
class LabelStats:
    tp_count: int
    fp_count: int
    unknown_count: int


def fuse(alerts: list[RawAlert], mappings: list[CheckerMapping]) -> FuseResult:
    """Fuse mapped raw alerts into per-(CWE, file, line) fused alerts.

    An alert contributes once per distinct mapped CWE of its checker; alerts
    with no mapping are excluded and counted.  Fused ids follow sorted key
    order, so the output is independent of input order.
    """
    by_checker: dict[tuple[str, str], list[CheckerMapping]] = {}
    for m in mappings:
        by_checker.setdefault((m.tool, m.checker), []).append(m)

    groups: dict[tuple[int, str, int], set[Contributor]] = {}
    excluded = 0
    for alert in alerts:
        applicable = by_checker.get((alert.tool, alert.checker), ())
        if not applicable:
            excluded += 1
            continue
        for m in applicable:
            key = (m.cwe, alert.filepath, alert.line)
            groups.setdefault(key, set()).add(
                Contributor(alert.tool, alert.checker, alert.alert_id, m.provenance)
            )

    fused = [
        FusedAlert(fused_id, cwe, filepath, line, tuple(sorted(groups[(cwe, filepath, line)])))
        for fused_id, (cwe, filepath, line) in enumerate(sorted(groups))
    ]
    return FuseResult(fused=fused, excluded=excluded)


class _VerdictIndex:
    """Indexed flaw and GOOD-span lookups shared by derive_verdict and label_all."""

    def __init__(self, flaws: list[FlawRecord], spans: list[FunctionSpan]):
        self.flaw_keys = {(f.filepath, f.line, f.cwe) for f in flaws}
        self.good_spans: dict[str, list[FunctionSpan]] = {}
        for span in spans:
            if span.polarity == GOOD:
                self.good_spans.setdefault(span.filepath, []).append(span)

    def verdict(self, cwe: int, filepath: str, line: int) -> str:
        if (filepath, line, cwe) in self.flaw_keys:
            return VERDICT_TRUE
        for span in self.good_spans.get(filepath, ()):
            if span.start_line <= line <= span.end_line and span.cwe == cwe:
                return VERDICT_FALSE
        return VERDICT_UNKNOWN


def derive_verdict(fa: FusedAlert, flaws: list[FlawRecord], spans: list[FunctionSpan]) -> str:
    """Derive the ground-truth verdict for one fused alert.

    The manifest-match rule takes precedence over the GOOD-span rule.
    """
    return _VerdictIndex(flaws, spans).verdict(fa.cwe, fa.filepath, fa.line)


def label_all(
    fused: list[FusedAlert], flaws: list[FlawRecord], spans: list[FunctionSpan]
) -> tuple[list[FusedAlert], LabelStats]:
    """Apply verdict derivation to every fused alert and tally the outcome."""
    index = _VerdictIndex(flaws, spans)
    labeled = []
    tally = {VERDICT_TRUE: 0, VERDICT_FALSE: 0, VERDICT_UNKNOWN: 0}
    for fa in fused:
        verdict = index.verdict(fa.cwe, fa.filepath, fa.line)
        tally[verdict] += 1
        labeled.append(replace(fa, verdict=verdict))
    stats = LabelStats(
        tp_count=tally[VERDICT_TRUE],
        fp_count=tally[VERDICT_FALSE],
        unknown_count=tally[VERDICT_UNKNOWN],
    )
    return labeled, stats


def estimate_manual_cost(n_labeled: int, seconds_per_alert: float = 117.0) -> float:
    """Hours a human would have spent triaging, at the default 117 s per alert.

    Rounded to 0.1 h.
    """
    if n_labeled < 0:
        raise ValidationError(f"alert count must be non-negative, got {n_labeled}")
    return round(n_labeled * seconds_per_alert / 3600.0, 1)


# ---------------------------------------------------------------------------
# Stage formats
# ---------------------------------------------------------------------------

EXPORT_CSV_HEADER = ["fused_id", "cwe", "file", "line", "verdict", "n_tools", "tools", "provenance"]


def fused_to_csv(fused: list[FusedAlert]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EXPORT_CSV_HEADER)
    for fa in fused:
        tools = fa.tools()
        writer.writerow(
            [fa.fused_id, fa.cwe, fa.filepath, fa.line, fa.verdict, len(tools), ";".join(tools), fa.provenance()]
        )
    return out.getvalue()


def fused_to_jsonl(fused: list[FusedAlert]) -> str:
    lines = []
    for fa in fused:
        lines.append(
            json.dumps(
                {
                    "fused_id": fa.fused_id,
                    "cwe": fa.cwe,
                    "file": fa.filepath,
                    "line": fa.line,
                    "verdict": fa.verdict,
                    "contributors": [
                        {"tool": c.tool, "checker": c.checker, "alert_id": c.alert_id, "provenance": c.provenance}
                        for c in fa.contributors
                    ],
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def fused_from_jsonl(document: str) -> list[FusedAlert]:
    fused = []
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            contributors = tuple(
                sorted(
                    Contributor(c["tool"], c["checker"], c["alert_id"], c["provenance"])
                    for c in record["contributors"]
                )
            )
            fused.append(
                FusedAlert(
                    fused_id=record["fused_id"],
                    cwe=record["cwe"],
                    filepath=record["file"],
                    line=record["line"],
                    contributors=contributors,
                    verdict=record.get("verdict", VERDICT_UNKNOWN),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"fused-alert JSONL line {lineno}: {exc}") from exc
    return fused
