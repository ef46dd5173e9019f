"""Train/test split construction around speculative-mapping contamination.

The hold-out test set must stay comparable across every training
configuration, so it is drawn only from "pure" fused alerts: those whose
(file, line) is not shared with any alert of an ever-speculatively-mapped
checker, under any (threshold, direction) configuration.  Training sets then
range from the known-mappings-only baseline to the most permissive
speculative set.

Only True/False-labeled fused alerts enter any of the sets; Unknown-verdict
alerts are counted separately.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field

from ..errors import ValidationError
from ..fuse_label import VERDICT_FALSE, VERDICT_TRUE, FusedAlert
from ..mapping import BACKWARD, FORWARD, KNOWN, SPECULATIVE, CheckerMapping

logger = logging.getLogger(__name__)

PAPER_THRESHOLDS = (0.0, 5.0, 25.0, 50.0, 75.0, 100.0)
SPLIT_DIRECTIONS = (FORWARD, BACKWARD)


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split parameters; stratification is fixed on (verdict, cwe)."""

    test_fraction: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


@dataclass
class DatasetBundle:
    """Fused-alert id sets for every training configuration plus the test set."""

    af_mapped: frozenset[int]
    af_pure: frozenset[int]
    af_test: frozenset[int]
    af_non_speculative: frozenset[int]
    af_speculative: dict[tuple[float, str], frozenset[int]] = field(default_factory=dict)
    unknown_count: int = 0
    requested_test_fraction: float = 0.30
    achieved_test_fraction: float = 0.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def build_splits(
    fused: list[FusedAlert],
    candidates: list[CheckerMapping],
    spec: SplitSpec = SplitSpec(),
    thresholds: tuple[float, ...] = PAPER_THRESHOLDS,
    directions: tuple[str, ...] = SPLIT_DIRECTIONS,
) -> DatasetBundle:
    """Derive the dataset bundle from labeled fused alerts.

    ``candidates`` must be the speculative mappings inferred at threshold 0
    for each direction (the superset of every configuration); each carries the
    match percentage that decides its admission at higher thresholds.
    """
    labeled = {fa.fused_id: fa for fa in fused if fa.verdict in (VERDICT_TRUE, VERDICT_FALSE)}
    unknown_count = sum(1 for fa in fused if fa.verdict not in (VERDICT_TRUE, VERDICT_FALSE))

    candidate_rate: dict[tuple[str, str, str], tuple[int, float]] = {}
    for cand in candidates:
        if cand.provenance != SPECULATIVE or cand.direction is None or cand.match_pct is None:
            raise ValidationError(
                "speculative candidates must carry provenance=speculative, a direction, and a match_pct"
            )
        key = (cand.tool, cand.checker, cand.direction)
        existing = candidate_rate.get(key)
        if existing is None or cand.match_pct > existing[1]:
            candidate_rate[key] = (cand.cwe, cand.match_pct)

    af_mapped = frozenset(
        fa.fused_id for fa in labeled.values() if any(c.provenance == KNOWN for c in fa.contributors)
    )

    # Lines hosting any alert of an ever-speculatively-mapped checker.
    tainted_lines = {
        (fa.filepath, fa.line)
        for fa in fused
        if any(c.provenance == SPECULATIVE for c in fa.contributors)
    }
    af_pure = frozenset(
        fid for fid in af_mapped if (labeled[fid].filepath, labeled[fid].line) not in tainted_lines
    )

    af_test = _stratified_test_set(labeled, af_mapped, af_pure, spec)
    af_non_speculative = af_mapped - af_test

    af_speculative: dict[tuple[float, str], frozenset[int]] = {}
    for direction in directions:
        for threshold in thresholds:
            ids = set()
            for fid, fa in labeled.items():
                if fid in af_test:
                    continue
                if fid in af_mapped:
                    ids.add(fid)
                    continue
                if _speculatively_admitted(fa, candidate_rate, direction, threshold):
                    ids.add(fid)
            af_speculative[(float(threshold), direction)] = frozenset(ids)

    achieved = len(af_test) / len(af_mapped) if af_mapped else 0.0
    return DatasetBundle(
        af_mapped=af_mapped,
        af_pure=af_pure,
        af_test=af_test,
        af_non_speculative=af_non_speculative,
        af_speculative=af_speculative,
        unknown_count=unknown_count,
        requested_test_fraction=spec.test_fraction,
        achieved_test_fraction=achieved,
    )


def _speculatively_admitted(
    fa: FusedAlert,
    candidate_rate: dict[tuple[str, str, str], tuple[int, float]],
    direction: str,
    threshold: float,
) -> bool:
    for c in fa.contributors:
        if c.provenance != SPECULATIVE:
            continue
        entry = candidate_rate.get((c.tool, c.checker, direction))
        if entry is None or entry[0] != fa.cwe:
            continue
        rate = entry[1]
        if (threshold > 0 and rate >= threshold) or (threshold == 0 and rate > 0):
            return True
    return False


def _stratified_test_set(
    labeled: dict[int, FusedAlert],
    af_mapped: frozenset[int],
    af_pure: frozenset[int],
    spec: SplitSpec,
) -> frozenset[int]:
    """Stratified (verdict, cwe) sample from AF_pure sized against AF_mapped.

    Per-stratum counts use round-half-up, then a global adjustment nudges the
    total to round(test_fraction * |AF_mapped|), capped by per-stratum
    availability in AF_pure.  Shortfalls warn; a globally impossible target
    fails loudly.
    """
    if not af_mapped:
        return frozenset()

    def stratum(fid: int) -> tuple[str, int]:
        fa = labeled[fid]
        return (fa.verdict, fa.cwe)

    mapped_counts: dict[tuple[str, int], int] = {}
    for fid in af_mapped:
        key = stratum(fid)
        mapped_counts[key] = mapped_counts.get(key, 0) + 1
    pure_ids: dict[tuple[str, int], list[int]] = {}
    for fid in sorted(af_pure):
        pure_ids.setdefault(stratum(fid), []).append(fid)

    total_target = _round_half_up(spec.test_fraction * len(af_mapped))
    if total_target > len(af_pure):
        raise ValidationError(
            f"test_fraction {spec.test_fraction} needs {total_target} pure fused alerts "
            f"but only {len(af_pure)} are available"
        )

    exact = {key: spec.test_fraction * count for key, count in mapped_counts.items()}
    available = {key: len(pure_ids.get(key, [])) for key in mapped_counts}
    targets = {key: min(_round_half_up(exact[key]), available[key]) for key in mapped_counts}

    for key in sorted(mapped_counts):
        if _round_half_up(exact[key]) > available[key]:
            logger.warning(
                "stratum %s: wanted %d test alerts but only %d pure ones are available",
                key, _round_half_up(exact[key]), available[key],
            )

    diff = total_target - sum(targets.values())
    while diff > 0:
        spare = [key for key in targets if targets[key] < available[key]]
        if not spare:
            logger.warning(
                "test-set target %d unreachable; best effort is %d", total_target, sum(targets.values())
            )
            break
        key = sorted(spare, key=lambda k: (-(exact[k] - targets[k]), k))[0]
        targets[key] += 1
        diff -= 1
    while diff < 0:
        shrinkable = [key for key in targets if targets[key] > 0]
        key = sorted(shrinkable, key=lambda k: (exact[k] - targets[k], k))[0]
        targets[key] -= 1
        diff += 1

    rng = random.Random(spec.seed)
    test_ids: set[int] = set()
    for key in sorted(targets):
        ids = pure_ids.get(key, [])
        take = targets[key]
        if take > 0:
            test_ids.update(rng.sample(ids, take))
    return frozenset(test_ids)


def bundle_to_json(bundle: DatasetBundle) -> str:
    payload = {
        "af_mapped": sorted(bundle.af_mapped),
        "af_pure": sorted(bundle.af_pure),
        "af_test": sorted(bundle.af_test),
        "af_non_speculative": sorted(bundle.af_non_speculative),
        "af_speculative": [
            {"threshold": t, "direction": d, "ids": sorted(ids)}
            for (t, d), ids in sorted(bundle.af_speculative.items(), key=lambda item: (item[0][1], item[0][0]))
        ],
        "unknown_count": bundle.unknown_count,
        "requested_test_fraction": bundle.requested_test_fraction,
        "achieved_test_fraction": bundle.achieved_test_fraction,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def bundle_from_json(document: str) -> DatasetBundle:
    payload = json.loads(document)
    return DatasetBundle(
        af_mapped=frozenset(payload["af_mapped"]),
        af_pure=frozenset(payload["af_pure"]),
        af_test=frozenset(payload["af_test"]),
        af_non_speculative=frozenset(payload["af_non_speculative"]),
        af_speculative={
            (float(entry["threshold"]), entry["direction"]): frozenset(entry["ids"])
            for entry in payload["af_speculative"]
        },
        unknown_count=payload["unknown_count"],
        requested_test_fraction=payload["requested_test_fraction"],
        achieved_test_fraction=payload["achieved_test_fraction"],
    )
