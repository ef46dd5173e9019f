"""Synthetic test-suite corpora with known ground truth.

The generator emits real C source files (the span scanner has to parse them,
braces-in-strings and all), a manifest whose flaw lines sit inside the
bad-marked functions, a long-form metrics table with one planted
verdict-correlated metric, and per-tool alert artifacts whose TP/FP status is
recorded in a ledger at generation time.  Everything is deterministic under
the config seed.

Noise tools place false alarms only inside good-function bodies, so the
ledger's FP tag coincides exactly with the GOOD-span labeling rule and the
pipeline can be checked against the ledger with zero tolerance.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .errors import ValidationError
from .mapping import MappingRule

KNOWN_TOOL = "known"
CANDIDATE_TOOL = "speculative-candidate"
UNMAPPED_TOOL = "unmapped"

SARIF = "sarif"
JSONL = "jsonl"


@dataclass(frozen=True)
class ToolProfile:
    name: str
    detection_rate: float
    false_alarm_rate: float
    mapped: str = KNOWN_TOOL
    format: str = SARIF


DEFAULT_TOOLS = (
    ToolProfile("alpha", detection_rate=0.85, false_alarm_rate=0.35, mapped=KNOWN_TOOL, format=SARIF),
    ToolProfile("beta", detection_rate=0.55, false_alarm_rate=0.25, mapped=KNOWN_TOOL, format=JSONL),
    ToolProfile("gamma", detection_rate=0.6, false_alarm_rate=0.0, mapped=CANDIDATE_TOOL, format=SARIF),
    ToolProfile("delta", detection_rate=0.0, false_alarm_rate=0.2, mapped=UNMAPPED_TOOL, format=JSONL),
)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_testcases: int = 20
    cwe_pool: tuple[int, ...] = (121, 122, 78, 190)
    tools: tuple[ToolProfile, ...] = DEFAULT_TOOLS
    planted_feature_strength: float = 4.0
    variant_grid: int = 4
    metrics_source: str = "synthcc"
    planted_metric: str = "FUNC_CALLED_BY_LOCAL"

    def __post_init__(self):
        if self.n_testcases < 1:
            raise ValidationError("n_testcases must be >= 1")
        if not self.cwe_pool:
            raise ValidationError("cwe_pool must not be empty")
        for tool in self.tools:
            if not 0.0 <= tool.detection_rate <= 1.0 or not 0.0 <= tool.false_alarm_rate <= 1.0:
                raise ValidationError(f"tool {tool.name}: rates must be in [0, 1]")
            if tool.mapped == UNMAPPED_TOOL and tool.detection_rate > 0:
                raise ValidationError(
                    f"tool {tool.name}: an unmapped noise tool must have detection_rate 0, "
                    "otherwise speculation would recover a mapping for it"
                )

    @property
    def planted_feature(self) -> str:
        return f"{self.metrics_source}.{self.planted_metric}"


@dataclass(frozen=True)
class TestCaseTruth:
    __test__ = False  # keep pytest collection away from this domain type

    index: int
    filepath: str
    cwe: int
    variant: str
    flaw_line: int
    bad_function: str
    bad_span: tuple[int, int]
    good_function: str
    good_span: tuple[int, int]
    good_body: tuple[int, int]


@dataclass(frozen=True)
class LedgerEntry:
    tool: str
    checker: str
    filepath: str
    line: int
    cwe: int
    is_tp: bool


@dataclass
class SynthTruth:
    testcases: list[TestCaseTruth] = field(default_factory=list)
    alerts: list[LedgerEntry] = field(default_factory=list)
    planted_feature: str = ""

    def expected_verdict(self, cwe: int, filepath: str, line: int) -> str:
        """Ledger-side verdict for a fused (cwe, file, line) key."""
        if not hasattr(self, "_case_index"):
            self._case_index = {case.filepath: case for case in self.testcases}
        case = self._case_index.get(filepath)
        if case is None or cwe != case.cwe:
            return "Unknown"
        if line == case.flaw_line:
            return "True"
        if case.good_span[0] <= line <= case.good_span[1]:
            return "False"
        return "Unknown"


@dataclass
class SynthCorpus:
    config: SynthConfig
    sources: dict[str, str]
    manifest_xml: str
    metrics_csv: str
    cert_map_csv: str
    known_rules: list[MappingRule]
    truth: SynthTruth


@dataclass(frozen=True)
class ToolArtifact:
    tool: str
    format: str
    text: str


def checker_for(tool: str, cwe: int) -> str:
    return f"{tool.upper()}.C{cwe}"


def generate_corpus(config: SynthConfig) -> SynthCorpus:
    """Generate sources, manifest, metrics, and the testcase truth ledger."""
    rng = random.Random(config.seed)
    truth = SynthTruth(planted_feature=config.planted_feature)
    sources: dict[str, str] = {}
    manifest_entries: list[str] = []
    metrics_rows: list[str] = ["source,scope,file,function,start_line,end_line,metric,value"]

    for i in range(config.n_testcases):
        cwe = config.cwe_pool[i % len(config.cwe_pool)]
        variant = f"{(i % config.variant_grid) + 1:02d}"
        filepath = f"testcases/CWE{cwe}/CWE{cwe}_synth_case{i:05d}_{variant}.c"
        text, case = _render_source(i, cwe, variant, filepath)
        sources[filepath] = text
        truth.testcases.append(case)

        manifest_entries.append(
            f'  <testcase>\n    <file path="{filepath}">\n'
            f'      <flaw line="{case.flaw_line}" name="CWE-{cwe}: Synthetic condition {cwe}"/>\n'
            f"    </file>\n  </testcase>"
        )

        n_lines = text.count("\n")
        metrics_rows.append(f"{config.metrics_source},file,{filepath},,,,FILE_LINES,{n_lines}")
        for name, span, is_bad in (
            (case.bad_function, case.bad_span, True),
            (case.good_function, case.good_span, False),
        ):
            center = config.planted_feature_strength if is_bad else 0.0
            planted = rng.gauss(center, 1.0)
            cyclomatic = rng.randint(1, 8)
            start, end = span
            prefix = f"{config.metrics_source},function,{filepath},{name},{start},{end}"
            metrics_rows.append(f"{prefix},{config.planted_metric},{planted!r}")
            metrics_rows.append(f"{prefix},CYCLOMATIC,{cyclomatic}")
            metrics_rows.append(f"{prefix},SLOC,{end - start + 1}")

    manifest_xml = "<container>\n" + "\n".join(manifest_entries) + "\n</container>\n"
    known_rules = [
        MappingRule(tool=t.name, checker_pattern=checker_for(t.name, cwe), is_regex=False, cwe=cwe)
        for t in config.tools
        if t.mapped == KNOWN_TOOL
        for cwe in sorted(set(config.cwe_pool))
    ]
    return SynthCorpus(
        config=config,
        sources=sources,
        manifest_xml=manifest_xml,
        metrics_csv="\n".join(metrics_rows) + "\n",
        cert_map_csv=_cert_map_csv(config),
        known_rules=known_rules,
        truth=truth,
    )


def _render_source(index: int, cwe: int, variant: str, filepath: str) -> tuple[str, TestCaseTruth]:
    lines: list[str] = []

    def add(text: str) -> int:
        lines.append(text)
        return len(lines)

    bad_name = f"CWE{cwe}_synth_case{index:05d}_bad"
    good_name = f"CWE{cwe}_synth_case{index:05d}_goodG2B"

    add(f"/* synthetic testcase {index}, variant {variant} */")
    add("#include <stdlib.h>")
    add("")
    add(f"static int helper_{index}(int value) {{")
    add("    /* brace bait in a comment: { */")
    add("    return value + 1;")
    add("}")
    add("")
    bad_start = add(f"void {bad_name}(void)")
    add("{")
    add("    char buffer[8];")
    add('    const char *tag = "}brace bait in a string{";')
    add("    int index = 12;")
    flaw_line = add("    buffer[index] = 'x';")
    add("    (void)tag;")
    add("    (void)buffer;")
    bad_end = add("}")
    add("")
    good_start = add(f"static void {good_name}(void)")
    add("{")
    good_body_start = add("    char buffer[32];")
    add("    int index = 4;")
    add("    if (index < 32) {")
    add("        buffer[index] = 'x';")
    add("    }")
    good_body_end = add("    (void)buffer;")
    good_end = add("}")
    add("")

    case = TestCaseTruth(
        index=index,
        filepath=filepath,
        cwe=cwe,
        variant=variant,
        flaw_line=flaw_line,
        bad_function=bad_name,
        bad_span=(bad_start, bad_end),
        good_function=good_name,
        good_span=(good_start, good_end),
        good_body=(good_body_start, good_body_end),
    )
    return "\n".join(lines) + "\n", case


def _cert_map_csv(config: SynthConfig) -> str:
    """A small many-to-many rule table over the pool: one rule per CWE plus a
    catch-all rule spanning the first two CWEs."""
    rows = ["cert_rule,cwe"]
    pool = sorted(set(config.cwe_pool))
    for cwe in pool:
        rows.append(f"RULE-{cwe},{cwe}")
    for cwe in pool[:2]:
        rows.append(f"RULE-COMBO,{cwe}")
    return "\n".join(rows) + "\n"


def generate_alerts(corpus: SynthCorpus) -> list[ToolArtifact]:
    """Emit per-tool alert artifacts and record every alert in the ledger.

    Each tool fires on each flaw line with its detection rate, and places at
    most one false alarm per testcase inside the good-function body with its
    false-alarm rate.
    """
    config = corpus.config
    rng = random.Random(config.seed + 1_000_003)
    artifacts = []
    for tool in config.tools:
        emitted: list[LedgerEntry] = []
        for case in corpus.truth.testcases:
            checker = checker_for(tool.name, case.cwe)
            if rng.random() < tool.detection_rate:
                emitted.append(
                    LedgerEntry(tool.name, checker, case.filepath, case.flaw_line, case.cwe, is_tp=True)
                )
            if rng.random() < tool.false_alarm_rate:
                line = rng.randint(case.good_body[0], case.good_body[1])
                emitted.append(
                    LedgerEntry(tool.name, checker, case.filepath, line, case.cwe, is_tp=False)
                )
        corpus.truth.alerts.extend(emitted)
        if tool.format == SARIF:
            text = _render_sarif(tool.name, emitted)
        else:
            text = _render_jsonl(emitted)
        artifacts.append(ToolArtifact(tool=tool.name, format=tool.format, text=text))
    return artifacts


def _render_sarif(tool: str, entries: list[LedgerEntry]) -> str:
    results = [
        {
            "ruleId": e.checker,
            "message": {"text": f"possible condition {e.cwe}"},
            "locations": [
                {
                    "physicalLocation": {
                        "artifactLocation": {"uri": e.filepath},
                        "region": {"startLine": e.line},
                    }
                }
            ],
        }
        for e in entries
    ]
    doc = {
        "version": "2.1.0",
        "runs": [{"tool": {"driver": {"name": tool}}, "results": results}],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _render_jsonl(entries: list[LedgerEntry]) -> str:
    lines = [
        json.dumps({"tool": e.tool, "checker": e.checker, "file": e.filepath, "line": e.line}, sort_keys=True)
        for e in entries
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def ledger_to_jsonl(truth: SynthTruth) -> str:
    lines = [
        json.dumps(
            {
                "tool": e.tool,
                "checker": e.checker,
                "file": e.filepath,
                "line": e.line,
                "cwe": e.cwe,
                "is_tp": e.is_tp,
            },
            sort_keys=True,
        )
        for e in truth.alerts
    ]
    return "\n".join(lines) + ("\n" if lines else "")
