"""Shared pipeline helpers for the test suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from alertlab.features import FeatureVector, build_features, parse_metrics_csv
from alertlab.fuse_label import FusedAlert, LabelStats, fuse, label_all
from alertlab.ingest import RawAlert, parse_normalized_jsonl, parse_sarif
from alertlab.mapping import BACKWARD, FORWARD, CheckerMapping, count_matches, resolve_known, speculate
from alertlab.suite import FlawRecord, FunctionSpan, parse_identity, parse_manifest, scan_function_spans
from alertlab.synth import SynthConfig, SynthCorpus, generate_alerts, generate_corpus


@dataclass
class PipelineRun:
    """Everything the in-memory pipeline produced for one synthetic corpus."""

    config: SynthConfig
    corpus: SynthCorpus
    alerts: list[RawAlert]
    flaws: list[FlawRecord]
    spans: list[FunctionSpan]
    known: list[CheckerMapping]
    candidates: list[CheckerMapping]
    labeled: list[FusedAlert]
    stats: LabelStats
    vectors: list[FeatureVector] = field(default_factory=list)


def run_pipeline(config: SynthConfig, with_features: bool = True, speculate_tools: bool = True) -> PipelineRun:
    """Run synth -> ingest -> suite -> mapping -> fuse -> label (-> features)."""
    corpus = generate_corpus(config)
    artifacts = generate_alerts(corpus)

    alerts: list[RawAlert] = []
    for artifact in artifacts:
        if artifact.format == "sarif":
            parsed = parse_sarif(artifact.text, start_id=len(alerts))
        else:
            parsed = parse_normalized_jsonl(artifact.text, tool=artifact.tool, start_id=len(alerts))
        alerts.extend(parsed.alerts)

    flaws = parse_manifest(corpus.manifest_xml).flaws
    spans = []
    for filepath in sorted(corpus.sources):
        spans.extend(scan_function_spans(corpus.sources[filepath], filepath))

    known = resolve_known(corpus.known_rules, alerts)
    candidates: list[CheckerMapping] = []
    if speculate_tools:
        mapped_tools = {m.tool for m in known}
        for tool in sorted({a.tool for a in alerts} - mapped_tools):
            table = count_matches([a for a in alerts if a.tool == tool], flaws)
            for direction in (FORWARD, BACKWARD):
                candidates.extend(speculate(table, direction, threshold=0.0))

    fused = fuse(alerts, known + candidates).fused
    labeled, stats = label_all(fused, flaws, spans)

    vectors: list[FeatureVector] = []
    if with_features:
        metrics = parse_metrics_csv(corpus.metrics_csv, config.metrics_source)
        identities = [parse_identity(p) for p in sorted(corpus.sources)]
        vectors = build_features(labeled, metrics, spans, identities, tools=[t.name for t in config.tools])

    return PipelineRun(
        config=config,
        corpus=corpus,
        alerts=alerts,
        flaws=flaws,
        spans=spans,
        known=known,
        candidates=candidates,
        labeled=labeled,
        stats=stats,
        vectors=vectors,
    )


@pytest.fixture
def pipeline_factory():
    return run_pipeline
