"""Ground-truth metadata extraction from a test suite.

Three sources of truth come out of a suite checkout:

* the manifest XML, listing known flaw locations with their CWE,
* GOOD/BAD function spans recovered by a lexical scanner over the C sources,
* per-file identity (CWE number and flow-variant id) parsed from filenames.

The span scanner is deliberately not a C parser: it masks comments, string
and character literals, and preprocessor lines, then tracks brace depth to
find ``identifier(...) {`` definitions at file scope.  Exact spans from an
external tool can be supplied instead through the spans JSONL side channel.
"""

from __future__ import annotations

import bisect
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .ingest import normalize_path

logger = logging.getLogger(__name__)

GOOD = "GOOD"
BAD = "BAD"
NEUTRAL = "NEUTRAL"

_CWE_IN_NAME = re.compile(r"CWE-?(\d+)")
_CWE_PREFIX = re.compile(r"^CWE(\d+)_")
_VARIANT_SUFFIX = re.compile(r"_(\d+[a-zA-Z]*)(?:\.[^.]*)?$")
_IDENTIFIER_CALL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(")

# Keywords that can precede '(' in C; never function names.
_C_KEYWORDS = frozenset(
    "if while for switch return sizeof do else case goto typedef".split()
)


@dataclass(frozen=True)
class FlawRecord:
    """One manifest entry: a known flaw of a given CWE at (file, line)."""

    filepath: str
    line: int
    cwe: int


@dataclass(frozen=True)
class FunctionSpan:
    filepath: str
    function_name: str
    start_line: int
    end_line: int
    polarity: str
    cwe: int | None = None


@dataclass(frozen=True)
class TestCaseIdentity:
    __test__ = False  # keep pytest collection away from this domain type

    filepath: str
    cwe: int | None = None
    variant_id: str | None = None


@dataclass
class ParsedManifest:
    flaws: list[FlawRecord]
    skipped: int
    total: int


def parse_identity(filepath: str) -> TestCaseIdentity:
    """Parse CWE number and flow-variant id from a testcase filename."""
    filepath = normalize_path(filepath)
    name = filepath.rsplit("/", 1)[-1]
    cwe_match = _CWE_PREFIX.match(name)
    variant_match = _VARIANT_SUFFIX.search(name)
    return TestCaseIdentity(
        filepath=filepath,
        cwe=int(cwe_match.group(1)) if cwe_match else None,
        variant_id=variant_match.group(1) if variant_match else None,
    )


def parse_manifest(document: str) -> ParsedManifest:
    """Parse a SARD-style manifest into deduplicated flaw records.

    ``<mixed>`` elements are treated like ``<flaw>``.  Elements missing a line
    attribute or a parseable ``CWE-<digits>`` in their name are skipped and
    counted.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"malformed manifest XML at line {line}, column {column}: {exc.msg}") from exc

    flaws: list[FlawRecord] = []
    seen: set[FlawRecord] = set()
    skipped = 0
    total = 0
    for file_el in root.iter("file"):
        path_attr = file_el.get("path")
        if not path_attr:
            continue
        filepath = normalize_path(path_attr)
        for tag in ("flaw", "mixed"):
            for flaw_el in file_el.iter(tag):
                total += 1
                line_attr = flaw_el.get("line")
                cwe_match = _CWE_IN_NAME.search(flaw_el.get("name", ""))
                if line_attr is None or cwe_match is None:
                    skipped += 1
                    continue
                record = FlawRecord(filepath, int(line_attr), int(cwe_match.group(1)))
                if record not in seen:
                    seen.add(record)
                    flaws.append(record)
    return ParsedManifest(flaws=flaws, skipped=skipped, total=total)


def _mask_non_code(source: str) -> str:
    """Replace comment, string/char literal, and preprocessor bytes with spaces.

    Newlines survive so positions keep their line numbers; every brace and
    paren left in the output is real code structure.
    """
    out = list(source)
    i = 0
    n = len(source)
    state = "code"
    line_start = True
    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if state == "code":
            if line_start and ch == "#":
                state = "preproc"
                out[i] = " "
            elif ch == "/" and nxt == "/":
                state = "line_comment"
                out[i] = out[i + 1] = " "
                i += 1
            elif ch == "/" and nxt == "*":
                state = "block_comment"
                out[i] = out[i + 1] = " "
                i += 1
            elif ch == '"':
                state = "string"
                out[i] = " "
            elif ch == "'":
                state = "char"
                out[i] = " "
        elif state == "preproc":
            if ch == "\n":
                state = "code"
            else:
                out[i] = " "
        elif state == "line_comment":
            if ch == "\n":
                state = "code"
            else:
                out[i] = " "
        elif state == "block_comment":
            if ch == "*" and nxt == "/":
                out[i] = out[i + 1] = " "
                state = "code"
                i += 1
            elif ch != "\n":
                out[i] = " "
        elif state in ("string", "char"):
            if ch == "\\":
                out[i] = " "
                if nxt and nxt != "\n":
                    out[i + 1] = " "
                    i += 1
            elif (state == "string" and ch == '"') or (state == "char" and ch == "'"):
                out[i] = " "
                state = "code"
            elif ch != "\n":
                out[i] = " "
        if ch == "\n":
            line_start = True
        elif not ch.isspace():
            line_start = False
        i += 1
    return "".join(out)


def _polarity_of(name: str) -> str:
    lowered = name.lower()
    has_good = "good" in lowered
    has_bad = "bad" in lowered
    if has_good and has_bad:
        logger.warning("function %r carries both good and bad markers; treating as NEUTRAL", name)
        return NEUTRAL
    if has_good:
        return GOOD
    if has_bad:
        return BAD
    return NEUTRAL


def scan_function_spans(source: str, filepath: str) -> list[FunctionSpan]:
    """Scan C-like source for function definitions and their line spans.

    A definition is an ``identifier(...)`` at brace depth 0 whose closing
    paren is followed by ``{``; the span runs to the matching closing brace.
    Unbalanced braces at EOF produce a best-effort span to the last line.
    """
    filepath = normalize_path(filepath)
    cwe = parse_identity(filepath).cwe
    masked = _mask_non_code(source)
    n = len(masked)

    line_starts = [0]
    for i, ch in enumerate(source):
        if ch == "\n":
            line_starts.append(i + 1)
    last_line = len(line_starts) if not source.endswith("\n") else len(line_starts) - 1
    last_line = max(last_line, 1)

    def line_of(pos: int) -> int:
        return bisect.bisect_right(line_starts, pos)

    spans: list[FunctionSpan] = []
    depth = 0
    i = 0
    while i < n:
        ch = masked[i]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(depth - 1, 0)
        elif depth == 0 and (ch.isalpha() or ch == "_"):
            match = _IDENTIFIER_CALL.match(masked, i)
            if match is None or match.group(1) in _C_KEYWORDS:
                while i < n and (masked[i].isalnum() or masked[i] == "_"):
                    i += 1
                continue
            name = match.group(1)
            name_pos = i
            # Walk to the matching close paren of the parameter list.
            j = match.end() - 1
            paren_depth = 0
            while j < n:
                if masked[j] == "(":
                    paren_depth += 1
                elif masked[j] == ")":
                    paren_depth -= 1
                    if paren_depth == 0:
                        break
                j += 1
            if j >= n:
                break
            j += 1
            while j < n and masked[j].isspace():
                j += 1
            if j < n and masked[j] == "{":
                start_line = line_of(name_pos)
                body_depth = 0
                k = j
                end_line = None
                while k < n:
                    if masked[k] == "{":
                        body_depth += 1
                    elif masked[k] == "}":
                        body_depth -= 1
                        if body_depth == 0:
                            end_line = line_of(k)
                            break
                    k += 1
                if end_line is None:
                    logger.warning(
                        "unbalanced braces in %s: span for %r runs to end of file", filepath, name
                    )
                    end_line = last_line
                    k = n
                spans.append(FunctionSpan(filepath, name, start_line, end_line, _polarity_of(name), cwe))
                i = k + 1
                continue
            i = match.end()
            continue
        i += 1
    return spans


def load_spans_jsonl(document: str) -> list[FunctionSpan]:
    """Load exact function spans from the JSONL side channel.

    Polarity and CWE are derived the same way the scanner derives them, from
    the function name and the filename.
    """
    spans = []
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            filepath = normalize_path(record["file"])
            name = record["function"]
            start, end = int(record["start"]), int(record["end"])
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON on line {lineno}: {exc.msg}") from exc
        except KeyError as exc:
            raise ParseError(f"line {lineno} is missing key {exc.args[0]!r}") from exc
        if start < 1 or end < start:
            raise ValidationError(f"line {lineno}: invalid span [{start}, {end}]")
        spans.append(
            FunctionSpan(filepath, name, start, end, _polarity_of(name), parse_identity(filepath).cwe)
        )
    return spans


def spans_to_jsonl(spans: list[FunctionSpan]) -> str:
    lines = [
        json.dumps(
            {"file": s.filepath, "function": s.function_name, "start": s.start_line, "end": s.end_line},
            sort_keys=True,
        )
        for s in spans
    ]
    return "\n".join(lines) + ("\n" if lines else "")
