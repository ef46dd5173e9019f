"""File-based workspace shared by the CLI commands.

Each pipeline stage reads its declared inputs, writes into its own directory,
and records a manifest of input digests so later runs can detect staleness.
All outputs are plain text with deterministic serialization; identical inputs
and seed reproduce byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import StageError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Canonical stage artifacts, used to name the missing stage in errors.
ARTIFACT_STAGE = {
    "raw/tools.json": "synth",
    "corpus/manifest.xml": "synth",
    "corpus/metrics.csv": "synth",
    "alerts/alerts.jsonl": "ingest",
    "alerts/runs.json": "ingest",
    "suite/flaws.jsonl": "suite-scan",
    "suite/spans.jsonl": "suite-scan",
    "suite/identities.jsonl": "suite-scan",
    "mappings/known_rules.csv": "synth",
    "mappings/known_resolved.csv": "map-known",
    "mappings/speculative.csv": "map-speculate",
    "mappings/review.csv": "map-review",
    "fused/fused.jsonl": "fuse",
    "fused/labeled.jsonl": "label",
    "features/features.jsonl": "features",
    "features/splits.json": "split",
    "models/model.json": "train",
}


@dataclass
class Workspace:
    root: Path

    def path(self, rel: str) -> Path:
        return self.root / rel

    def exists(self, rel: str) -> bool:
        return self.path(rel).is_file()

    def require(self, rel: str) -> Path:
        path = self.path(rel)
        if not path.is_file():
            stage = ARTIFACT_STAGE.get(rel)
            hint = f"; run the '{stage}' stage first" if stage else ""
            raise StageError(f"missing input {rel}{hint}")
        return path

    def read_text(self, rel: str) -> str:
        return self.require(rel).read_text(encoding="utf-8")

    def write_text(self, rel: str, text: str) -> None:
        path = self.path(rel)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    def digest(self, rel: str) -> str:
        return hashlib.sha256(self.path(rel).read_bytes()).hexdigest()

    def write_stage_manifest(self, stage: str, dir_name: str, inputs: list[str], outputs: list[str]) -> None:
        manifest = {
            "stage": stage,
            "inputs": {rel: self.digest(rel) for rel in sorted(inputs) if self.exists(rel)},
            "outputs": sorted(outputs),
        }
        self.write_text(f"{dir_name}/{stage}.manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    def stale_stages(self) -> dict[str, list[str]]:
        """Stages whose recorded input digests no longer match the files on disk."""
        stale: dict[str, list[str]] = {}
        for manifest_path in sorted(self.root.glob("*/*.manifest.json")):
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            changed = []
            for rel, recorded in manifest.get("inputs", {}).items():
                if not self.exists(rel) or self.digest(rel) != recorded:
                    changed.append(rel)
            if changed:
                stale[manifest["stage"]] = changed
        return stale


def load_config(ws: Workspace, config_arg: str | None) -> dict:
    """Load the workspace config (TOML or JSON); empty when none exists."""
    if config_arg:
        path = Path(config_arg)
        if not path.is_file():
            raise ValidationError(f"config file {config_arg} does not exist")
    else:
        for candidate in ("alertlab.toml", "alertlab.json"):
            if ws.exists(candidate):
                path = ws.path(candidate)
                break
        else:
            return {}
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    with open(path, "rb") as handle:
        return tomllib.load(handle)
