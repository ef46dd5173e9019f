"""Batch command surface over a file-based workspace.

Each subcommand is one pipeline stage; stages communicate only through files
under the workspace root, so any stage can be rerun, diffed, or inspected.
Exit codes: 0 success, 1 validation/input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import features as features_mod
from . import fuse_label, ingest, mapping, suite, synth
from .errors import AlertLabError, ValidationError
from .learn import model_io
from .learn import splits as splits_mod
from .learn.evaluate import evaluate, load_cert_map_csv, report_to_csvs, sweep, sweep_to_csv
from .workspace import Workspace, load_config

SOURCE_EXTENSIONS = (".c", ".h", ".cc", ".cpp", ".cxx", ".hpp")


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems as validation errors (exit code 1)."""

    def error(self, message):
        raise ValidationError(message)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            parser.print_help()
            return 1
        args.func(args)
        return 0
    except AlertLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - anything else is an internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-w", "--workspace", default=".", help="workspace root (default: current directory)")
    common.add_argument("--config", default=None, help="config file (TOML or JSON); default <ws>/alertlab.toml")
    common.add_argument("--seed", type=int, default=None, help="seed for every random choice in the pipeline")

    parser = _Parser(prog="alertlab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus and tool artifacts")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="parse tool artifacts into the normalized alert stream")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("suite-scan", parents=[common], help="extract manifest flaws, function spans, identities")
    p.add_argument("--manifest", default="corpus/manifest.xml", help="manifest XML path (workspace-relative)")
    p.add_argument("--src", default="corpus", help="source tree to scan (workspace-relative)")
    p.add_argument("--spans-jsonl", default=None, help="use exact spans from this JSONL instead of scanning")
    p.set_defaults(func=cmd_suite_scan)

    p = sub.add_parser("map-known", parents=[common], help="resolve the known-mapping registry against alerts")
    p.add_argument("--rules", default="mappings/known_rules.csv", help="known-mapping rules CSV")
    p.set_defaults(func=cmd_map_known)

    p = sub.add_parser("map-speculate", parents=[common], help="infer speculative mappings for unmapped tools")
    p.set_defaults(func=cmd_map_speculate)

    p = sub.add_parser("map-review", parents=[common], help="emit (or promote) the manual-review report")
    p.add_argument("--promote", default=None, help="reviewed CSV whose confirmed rows join the known registry")
    p.set_defaults(func=cmd_map_review)

    p = sub.add_parser("fuse", parents=[common], help="fuse mapped alerts per (CWE, file, line)")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("label", parents=[common], help="derive ground-truth verdicts for fused alerts")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", parents=[common], help="join metrics into per-alert feature vectors")
    p.add_argument("--metrics", default="corpus/metrics.csv", help="metrics CSV path (workspace-relative)")
    p.add_argument("--source", default="metrics", help="fallback source name for the metrics CSV")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("split", parents=[common], help="build train/test dataset bundle")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", parents=[common], help="train a classifier")
    p.add_argument("--kind", default=None, choices=[model_io.GBT_KIND, model_io.LASSO_KIND])
    p.add_argument("--train-set", default="baseline", help="'baseline' or '<threshold>:<direction>'")
    p.add_argument("--output", default="models/model.json", help="model output path (workspace-relative)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate the trained model on the test set")
    p.add_argument("--model", default="models/model.json")
    p.add_argument("--cert-map", default=None, help="CERT rule-to-CWE CSV (default corpus/cert_map.csv if present)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="retrain per threshold-grid configuration and compare")
    p.add_argument("--kind", default=None, choices=[model_io.GBT_KIND, model_io.LASSO_KIND])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="summarize workspace state and statistics")
    p.set_defaults(func=cmd_report)

    return parser


def _setup(args) -> tuple[Workspace, dict, int]:
    ws = Workspace(Path(args.workspace))
    config = load_config(ws, args.config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    return ws, config, seed


# ---------------------------------------------------------------------------
# Stage data access
# ---------------------------------------------------------------------------


def _load_registry(ws: Workspace, config: dict) -> list[dict]:
    if config.get("tools"):
        return config["tools"]
    return json.loads(ws.read_text("raw/tools.json"))


def _load_alerts(ws: Workspace) -> list[ingest.RawAlert]:
    return ingest.parse_normalized_jsonl(ws.read_text("alerts/alerts.jsonl"), tool="unknown").alerts


def _load_flaws(ws: Workspace) -> list[suite.FlawRecord]:
    flaws = []
    for line in ws.read_text("suite/flaws.jsonl").splitlines():
        if line.strip():
            record = json.loads(line)
            flaws.append(suite.FlawRecord(record["file"], record["line"], record["cwe"]))
    return flaws


def _load_spans(ws: Workspace) -> list[suite.FunctionSpan]:
    return suite.load_spans_jsonl(ws.read_text("suite/spans.jsonl"))


def _load_identities(ws: Workspace) -> list[suite.TestCaseIdentity]:
    identities = []
    for line in ws.read_text("suite/identities.jsonl").splitlines():
        if line.strip():
            record = json.loads(line)
            identities.append(suite.TestCaseIdentity(record["file"], record.get("cwe"), record.get("variant")))
    return identities


def _load_mappings(ws: Workspace, include_speculative: bool = True) -> list[mapping.CheckerMapping]:
    mappings = []
    reader = csv.DictReader(io.StringIO(ws.read_text("mappings/known_resolved.csv")))
    for row in reader:
        mappings.append(mapping.CheckerMapping(tool=row["tool"], checker=row["checker"], cwe=int(row["cwe"])))
    if include_speculative and ws.exists("mappings/speculative.csv"):
        mappings.extend(mapping.load_speculative_csv(ws.read_text("mappings/speculative.csv")))
    return mappings


def _grid(config: dict) -> tuple[tuple[float, ...], tuple[str, ...]]:
    grid = config.get("grid", {})
    thresholds = tuple(float(t) for t in grid.get("thresholds", splits_mod.PAPER_THRESHOLDS))
    directions = tuple(grid.get("directions", splits_mod.SPLIT_DIRECTIONS))
    return thresholds, directions


def _hyperparameters(config: dict, kind: str) -> dict | None:
    section = config.get("train", {})
    return section.get("gbt" if kind == model_io.GBT_KIND else "lasso")


def _train_kind(args, config: dict) -> str:
    return args.kind or config.get("train", {}).get("kind", model_io.GBT_KIND)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> None:
    ws, config, seed = _setup(args)
    section = config.get("synth", {})
    tools = tuple(
        synth.ToolProfile(
            name=t["name"],
            detection_rate=float(t.get("detection_rate", 0.5)),
            false_alarm_rate=float(t.get("false_alarm_rate", 0.2)),
            mapped=t.get("mapped", synth.KNOWN_TOOL),
            format=t.get("format", synth.SARIF),
        )
        for t in section.get("tools", [])
    ) or synth.DEFAULT_TOOLS
    synth_config = synth.SynthConfig(
        seed=seed,
        n_testcases=int(section.get("n_testcases", 20)),
        cwe_pool=tuple(int(c) for c in section.get("cwe_pool", (121, 122, 78, 190))),
        tools=tools,
        planted_feature_strength=float(section.get("planted_feature_strength", 4.0)),
        variant_grid=int(section.get("variant_grid", 4)),
        metrics_source=section.get("metrics_source", "synthcc"),
        planted_metric=section.get("planted_metric", "FUNC_CALLED_BY_LOCAL"),
    )
    corpus = synth.generate_corpus(synth_config)
    artifacts = synth.generate_alerts(corpus)

    outputs = []
    for filepath, text in sorted(corpus.sources.items()):
        ws.write_text(f"corpus/{filepath}", text)
        outputs.append(f"corpus/{filepath}")
    ws.write_text("corpus/manifest.xml", corpus.manifest_xml)
    ws.write_text("corpus/metrics.csv", corpus.metrics_csv)
    ws.write_text("corpus/cert_map.csv", corpus.cert_map_csv)
    ws.write_text("mappings/known_rules.csv", mapping.known_to_csv(corpus.known_rules))
    registry = []
    for artifact in artifacts:
        ext = "sarif" if artifact.format == synth.SARIF else "jsonl"
        rel = f"raw/{artifact.tool}.{ext}"
        ws.write_text(rel, artifact.text)
        profile = next(t for t in synth_config.tools if t.name == artifact.tool)
        registry.append({"name": artifact.tool, "format": artifact.format, "path": rel, "mapped": profile.mapped})
    ws.write_text("raw/tools.json", json.dumps(registry, sort_keys=True, indent=2) + "\n")
    ws.write_text("truth/ledger.jsonl", synth.ledger_to_jsonl(corpus.truth))
    outputs += ["corpus/manifest.xml", "corpus/metrics.csv", "corpus/cert_map.csv",
                "mappings/known_rules.csv", "raw/tools.json", "truth/ledger.jsonl"]
    ws.write_stage_manifest("synth", "raw", [], outputs)
    print(f"synth: {synth_config.n_testcases} testcases, {len(corpus.truth.alerts)} alerts from {len(tools)} tools")


def cmd_ingest(args) -> None:
    ws, config, _ = _setup(args)
    registry = _load_registry(ws, config)
    alerts: list[ingest.RawAlert] = []
    runs = []
    inputs = ["raw/tools.json"]
    for entry in registry:
        rel = entry["path"]
        text = ws.read_text(rel)
        inputs.append(rel)
        if entry["format"] == "sarif":
            parsed = ingest.parse_sarif(text, start_id=len(alerts))
        else:
            parsed = ingest.parse_normalized_jsonl(text, tool=entry["name"], start_id=len(alerts))
        alerts.extend(parsed.alerts)
        runs.append(
            {
                "tool": entry["name"],
                "format": "sarif" if entry["format"] == "sarif" else "normalized-jsonl",
                "source_path": rel,
                "alert_count": len(parsed.alerts),
                "skipped": parsed.skipped,
                "total_results": parsed.total_results,
            }
        )
    ws.write_text("alerts/alerts.jsonl", ingest.to_jsonl(alerts))
    ws.write_text("alerts/runs.json", json.dumps(runs, sort_keys=True, indent=2) + "\n")
    ws.write_stage_manifest("ingest", "alerts", inputs, ["alerts/alerts.jsonl", "alerts/runs.json"])
    print(f"ingest: {len(alerts)} alerts from {len(runs)} runs")


def cmd_suite_scan(args) -> None:
    ws, _, _ = _setup(args)
    manifest_rel = args.manifest
    parsed = suite.parse_manifest(ws.read_text(manifest_rel))

    inputs = [manifest_rel]
    if args.spans_jsonl:
        spans = suite.load_spans_jsonl(ws.read_text(args.spans_jsonl))
        inputs.append(args.spans_jsonl)
        scanned_files = sorted({s.filepath for s in spans})
    else:
        src_root = ws.path(args.src)
        if not src_root.is_dir():
            raise ValidationError(f"source directory {args.src} does not exist; run the 'synth' stage or pass --src")
        spans = []
        scanned_files = []
        for path in sorted(src_root.rglob("*")):
            if path.suffix.lower() in SOURCE_EXTENSIONS and path.is_file():
                rel_file = path.relative_to(src_root).as_posix()
                spans.extend(suite.scan_function_spans(path.read_text(encoding="utf-8"), rel_file))
                scanned_files.append(rel_file)

    flaw_lines = [
        json.dumps({"file": f.filepath, "line": f.line, "cwe": f.cwe}, sort_keys=True)
        for f in parsed.flaws
    ]
    ws.write_text("suite/flaws.jsonl", "\n".join(flaw_lines) + ("\n" if flaw_lines else ""))
    ws.write_text("suite/spans.jsonl", suite.spans_to_jsonl(spans))
    identity_lines = []
    for rel_file in scanned_files:
        identity = suite.parse_identity(rel_file)
        identity_lines.append(
            json.dumps({"file": identity.filepath, "cwe": identity.cwe, "variant": identity.variant_id}, sort_keys=True)
        )
    ws.write_text("suite/identities.jsonl", "\n".join(identity_lines) + ("\n" if identity_lines else ""))
    ws.write_stage_manifest(
        "suite-scan", "suite", inputs, ["suite/flaws.jsonl", "suite/spans.jsonl", "suite/identities.jsonl"]
    )
    print(
        f"suite-scan: {len(parsed.flaws)} flaws ({parsed.skipped} skipped), "
        f"{len(spans)} spans in {len(scanned_files)} files"
    )


def cmd_map_known(args) -> None:
    ws, _, _ = _setup(args)
    rules = mapping.load_known_csv(ws.read_text(args.rules))
    alerts = _load_alerts(ws)
    resolved = mapping.resolve_known(rules, alerts)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["tool", "checker", "cwe"])
    for m in resolved:
        writer.writerow([m.tool, m.checker, m.cwe])
    ws.write_text("mappings/known_resolved.csv", out.getvalue())
    ws.write_stage_manifest(
        "map-known", "mappings", [args.rules, "alerts/alerts.jsonl"], ["mappings/known_resolved.csv"]
    )
    print(f"map-known: {len(resolved)} concrete mappings from {len(rules)} rules")


def _count_tables(ws: Workspace) -> dict[str, mapping.MatchCountTable]:
    """Count tables for every tool without a known mapping."""
    alerts = _load_alerts(ws)
    flaws = _load_flaws(ws)
    known = _load_mappings(ws, include_speculative=False)
    mapped_tools = {m.tool for m in known}
    tables = {}
    for tool in sorted({a.tool for a in alerts} - mapped_tools):
        tables[tool] = mapping.count_matches([a for a in alerts if a.tool == tool], flaws)
    return tables


def cmd_map_speculate(args) -> None:
    ws, config, _ = _setup(args)
    _, directions = _grid(config)
    tables = _count_tables(ws)
    candidates: list[mapping.CheckerMapping] = []
    for tool in sorted(tables):
        table = tables[tool]
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["checker", "cwe", "m_ij"])
        for checker, cwe in sorted(table.counts):
            writer.writerow([checker, cwe, table.counts[(checker, cwe)]])
        ws.write_text(f"mappings/counts_{tool}.csv", out.getvalue())
        for direction in directions:
            if direction == mapping.COMBINED:
                continue
            candidates.extend(mapping.speculate(table, direction, threshold=0.0))
    ws.write_text("mappings/speculative.csv", mapping.speculative_to_csv(candidates, tables))
    ws.write_stage_manifest(
        "map-speculate",
        "mappings",
        ["alerts/alerts.jsonl", "suite/flaws.jsonl", "mappings/known_resolved.csv"],
        ["mappings/speculative.csv"] + [f"mappings/counts_{tool}.csv" for tool in sorted(tables)],
    )
    print(f"map-speculate: {len(candidates)} candidates across {len(tables)} unmapped tools")


def cmd_map_review(args) -> None:
    ws, _, _ = _setup(args)
    if args.promote:
        rows = mapping.load_review_csv(ws.read_text(args.promote))
        promoted = mapping.promote_reviewed(rows)
        rules = mapping.load_known_csv(ws.read_text("mappings/known_rules.csv"))
        merged = list(rules)
        existing = {(r.tool, r.checker_pattern, r.cwe) for r in rules}
        for rule in promoted:
            if (rule.tool, rule.checker_pattern, rule.cwe) not in existing:
                merged.append(rule)
                existing.add((rule.tool, rule.checker_pattern, rule.cwe))
        ws.write_text("mappings/known_rules.csv", mapping.known_to_csv(merged))
        print(f"map-review: promoted {len(promoted)} reviewed mappings into the known registry")
        return

    candidates = mapping.load_speculative_csv(ws.read_text("mappings/speculative.csv"))
    tables = _count_tables(ws)
    all_rows = []
    candidate_count = 0
    all_pairs = 0
    for tool in sorted(tables):
        report = mapping.mapping_review_report([c for c in candidates if c.tool == tool], tables[tool])
        all_rows.extend(report.rows)
        candidate_count += report.candidate_count
        all_pairs += report.all_pairs_count
    ws.write_text("mappings/review.csv", mapping.review_to_csv(mapping.ReviewReport(all_rows, candidate_count, all_pairs)))
    summary = {"candidate_count": candidate_count, "all_pairs_count": all_pairs}
    ws.write_text("mappings/review_summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    ws.write_stage_manifest(
        "map-review",
        "mappings",
        ["mappings/speculative.csv", "alerts/alerts.jsonl", "suite/flaws.jsonl"],
        ["mappings/review.csv", "mappings/review_summary.json"],
    )
    print(f"map-review: {candidate_count} candidates vs {all_pairs} all-pairs combinations")


def cmd_fuse(args) -> None:
    ws, _, _ = _setup(args)
    alerts = _load_alerts(ws)
    mappings = _load_mappings(ws)
    result = fuse_label.fuse(alerts, mappings)
    ws.write_text("fused/fused.jsonl", fuse_label.fused_to_jsonl(result.fused))
    stats = {"n_fused": len(result.fused), "excluded_raw_alerts": result.excluded}
    ws.write_text("fused/fuse_stats.json", json.dumps(stats, sort_keys=True, indent=2) + "\n")
    inputs = ["alerts/alerts.jsonl", "mappings/known_resolved.csv"]
    if ws.exists("mappings/speculative.csv"):
        inputs.append("mappings/speculative.csv")
    ws.write_stage_manifest("fuse", "fused", inputs, ["fused/fused.jsonl", "fused/fuse_stats.json"])
    print(f"fuse: {len(result.fused)} fused alerts ({result.excluded} raw alerts unmapped)")


def cmd_label(args) -> None:
    ws, _, _ = _setup(args)
    fused = fuse_label.fused_from_jsonl(ws.read_text("fused/fused.jsonl"))
    flaws = _load_flaws(ws)
    spans = _load_spans(ws)
    labeled, stats = fuse_label.label_all(fused, flaws, spans)
    ws.write_text("fused/labeled.jsonl", fuse_label.fused_to_jsonl(labeled))
    ws.write_text("fused/labeled.csv", fuse_label.fused_to_csv(labeled))
    n_labeled = stats.tp_count + stats.fp_count
    payload = {
        "tp_count": stats.tp_count,
        "fp_count": stats.fp_count,
        "unknown_count": stats.unknown_count,
        "estimated_manual_hours": fuse_label.estimate_manual_cost(n_labeled),
    }
    ws.write_text("fused/label_stats.json", json.dumps(payload, sort_keys=True, indent=2) + "\n")
    ws.write_stage_manifest(
        "label",
        "fused",
        ["fused/fused.jsonl", "suite/flaws.jsonl", "suite/spans.jsonl"],
        ["fused/labeled.jsonl", "fused/labeled.csv", "fused/label_stats.json"],
    )
    print(
        f"label: {stats.tp_count} TP, {stats.fp_count} FP, {stats.unknown_count} unknown "
        f"(~{payload['estimated_manual_hours']} manual hours saved)"
    )


def cmd_features(args) -> None:
    ws, config, _ = _setup(args)
    labeled = fuse_label.fused_from_jsonl(ws.read_text("fused/labeled.jsonl"))
    spans = _load_spans(ws)
    identities = _load_identities(ws)
    metrics: list[features_mod.MetricsRecord] = []
    inputs = ["fused/labeled.jsonl", "suite/spans.jsonl", "suite/identities.jsonl"]
    metric_sources = config.get("metrics") or [{"path": args.metrics, "source": args.source}]
    for entry in metric_sources:
        rel = entry["path"]
        metrics.extend(features_mod.parse_metrics_csv(ws.read_text(rel), entry.get("source", "metrics")))
        inputs.append(rel)
    try:
        tools = [entry["name"] for entry in _load_registry(ws, config)]
    except AlertLabError:
        tools = None
    vectors = features_mod.build_features(labeled, metrics, spans, identities, tools=tools)
    ws.write_text("features/features.jsonl", features_mod.features_to_jsonl(vectors))
    ws.write_text("features/table.csv", features_mod.features_to_csv(vectors))
    ws.write_stage_manifest("features", "features", inputs, ["features/features.jsonl", "features/table.csv"])
    print(f"features: {len(vectors)} vectors over {len(features_mod.metric_names(metrics))} metrics")


def cmd_split(args) -> None:
    ws, config, seed = _setup(args)
    labeled = fuse_label.fused_from_jsonl(ws.read_text("fused/labeled.jsonl"))
    candidates = (
        mapping.load_speculative_csv(ws.read_text("mappings/speculative.csv"))
        if ws.exists("mappings/speculative.csv")
        else []
    )
    thresholds, directions = _grid(config)
    spec = splits_mod.SplitSpec(
        test_fraction=float(config.get("split", {}).get("test_fraction", 0.30)), seed=seed
    )
    bundle = splits_mod.build_splits(labeled, candidates, spec, thresholds, directions)
    ws.write_text("features/splits.json", splits_mod.bundle_to_json(bundle))
    inputs = ["fused/labeled.jsonl"]
    if ws.exists("mappings/speculative.csv"):
        inputs.append("mappings/speculative.csv")
    ws.write_stage_manifest("split", "features", inputs, ["features/splits.json"])
    print(
        f"split: |AF_mapped|={len(bundle.af_mapped)} |AF_pure|={len(bundle.af_pure)} "
        f"|AF_test|={len(bundle.af_test)} (achieved fraction {bundle.achieved_test_fraction:.3f})"
    )


def _resolve_train_ids(bundle: splits_mod.DatasetBundle, label: str) -> frozenset[int]:
    if label == "baseline":
        return bundle.af_non_speculative
    try:
        threshold_text, direction = label.split(":", 1)
        key = (float(threshold_text), direction)
    except ValueError as exc:
        raise ValidationError(f"bad --train-set {label!r}; expected 'baseline' or '<threshold>:<direction>'") from exc
    if key not in bundle.af_speculative:
        raise ValidationError(f"train set {label!r} not in the split grid {sorted(bundle.af_speculative)}")
    return bundle.af_speculative[key]


def cmd_train(args) -> None:
    ws, config, seed = _setup(args)
    vectors = features_mod.features_from_jsonl(ws.read_text("features/features.jsonl"))
    bundle = splits_mod.bundle_from_json(ws.read_text("features/splits.json"))
    train_ids = _resolve_train_ids(bundle, args.train_set)
    train_vectors = [v for v in vectors if v.fused_id in train_ids]
    kind = _train_kind(args, config)
    model = model_io.train(train_vectors, kind=kind, hyperparameters=_hyperparameters(config, kind), seed=seed)
    model.training_config["train_set"] = args.train_set
    ws.write_text(args.output, model_io.model_to_json(model))
    ws.write_stage_manifest(
        "train", "models", ["features/features.jsonl", "features/splits.json"], [args.output]
    )
    print(f"train: {kind} on {len(train_vectors)} vectors -> {args.output}")


def cmd_evaluate(args) -> None:
    ws, config, _ = _setup(args)
    model = model_io.model_from_json(ws.read_text(args.model))
    vectors = features_mod.features_from_jsonl(ws.read_text("features/features.jsonl"))
    bundle = splits_mod.bundle_from_json(ws.read_text("features/splits.json"))
    by_id = {v.fused_id: v for v in vectors}
    test_vectors = [by_id[fid] for fid in sorted(bundle.af_test) if fid in by_id]

    train_ids = _resolve_train_ids(bundle, model.training_config.get("train_set", "baseline"))
    train_cwe_counts: dict[int, int] = {}
    for fid in train_ids:
        if fid in by_id:
            cwe = by_id[fid].cwe
            train_cwe_counts[cwe] = train_cwe_counts.get(cwe, 0) + 1

    cert_rel = args.cert_map or ("corpus/cert_map.csv" if ws.exists("corpus/cert_map.csv") else None)
    cert_map = load_cert_map_csv(ws.read_text(cert_rel)) if cert_rel else None

    report = evaluate(model, test_vectors, train_cwe_counts, cert_map)
    tables = report_to_csvs(report)
    outputs = []
    for name, text in sorted(tables.items()):
        ws.write_text(f"reports/{name}", text)
        outputs.append(f"reports/{name}")
    payload = {
        "overall": report.overall.__dict__,
        "per_cwe": [m.__dict__ for m in report.per_cwe],
        "per_cert_rule": [m.__dict__ for m in report.per_cert_rule],
        "feature_importance": report.feature_importance,
        "n_test": len(test_vectors),
    }
    ws.write_text("reports/eval.json", json.dumps(payload, sort_keys=True, indent=2) + "\n")
    inputs = [args.model, "features/features.jsonl", "features/splits.json"]
    if cert_rel:
        inputs.append(cert_rel)
    ws.write_stage_manifest("evaluate", "reports", inputs, outputs + ["reports/eval.json"])
    auroc_text = "n/a" if report.overall.auroc is None else f"{report.overall.auroc:.4f}"
    print(f"evaluate: AUROC {auroc_text}, accuracy {report.overall.accuracy:.4f} on {len(test_vectors)} test alerts")


def cmd_sweep(args) -> None:
    ws, config, seed = _setup(args)
    vectors = features_mod.features_from_jsonl(ws.read_text("features/features.jsonl"))
    bundle = splits_mod.bundle_from_json(ws.read_text("features/splits.json"))
    kind = _train_kind(args, config)
    rows = sweep(
        bundle, vectors, kind=kind, hyperparameters=_hyperparameters(config, kind), seed=seed
    )
    ws.write_text("reports/sweep.csv", sweep_to_csv(rows))
    ws.write_stage_manifest(
        "sweep", "reports", ["features/features.jsonl", "features/splits.json"], ["reports/sweep.csv"]
    )
    print(f"sweep: {len(rows)} rows ({len(rows) - 1} grid configurations + baseline)")


def cmd_report(args) -> None:
    ws, _, _ = _setup(args)
    summary: dict = {}
    if ws.exists("alerts/runs.json"):
        runs = json.loads(ws.read_text("alerts/runs.json"))
        summary["alerts"] = {
            "total": sum(r["alert_count"] for r in runs),
            "per_tool": {r["tool"]: r["alert_count"] for r in runs},
            "skipped": sum(r["skipped"] for r in runs),
        }
    if ws.exists("fused/label_stats.json"):
        summary["labeling"] = json.loads(ws.read_text("fused/label_stats.json"))
    if ws.exists("mappings/review_summary.json"):
        summary["mapping_review"] = json.loads(ws.read_text("mappings/review_summary.json"))
    if ws.exists("features/splits.json"):
        bundle = splits_mod.bundle_from_json(ws.read_text("features/splits.json"))
        summary["splits"] = {
            "af_mapped": len(bundle.af_mapped),
            "af_pure": len(bundle.af_pure),
            "af_test": len(bundle.af_test),
            "af_non_speculative": len(bundle.af_non_speculative),
            "unknown_count": bundle.unknown_count,
            "achieved_test_fraction": bundle.achieved_test_fraction,
        }
    summary["stale_stages"] = ws.stale_stages()
    ws.write_text("reports/summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True, indent=2))


if __name__ == "__main__":
    sys.exit(main())
