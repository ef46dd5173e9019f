"""alertlab: label static-analysis alerts with test-suite ground truth,
infer checker-to-CWE mappings from co-occurrence evidence, and train alert
classifiers on the resulting archives."""

from .errors import (
    AlertLabError,
    ParseError,
    SchemaError,
    StageError,
    UndefinedRateError,
    ValidationError,
)
from .features import FeatureVector, MetricsRecord, build_features, parse_metrics_csv
from .fuse_label import (
    FusedAlert,
    LabelStats,
    derive_verdict,
    estimate_manual_cost,
    fuse,
    label_all,
)
from .ingest import RawAlert, ToolRun, normalize_path, parse_normalized_jsonl, parse_sarif
from .mapping import (
    CheckerMapping,
    MatchCountTable,
    backward_pct,
    combined_pct,
    count_matches,
    forward_pct,
    mapping_review_report,
    speculate,
)
from .suite import (
    FlawRecord,
    FunctionSpan,
    TestCaseIdentity,
    parse_identity,
    parse_manifest,
    scan_function_spans,
)
from .synth import SynthConfig, SynthCorpus, ToolProfile, generate_alerts, generate_corpus

__version__ = "0.1.0"
