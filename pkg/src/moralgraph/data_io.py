"""Parsers and writers for every external file the pipeline reads or emits.

All formats are UTF-8 CSV with a header row; JSON is offered for reports
consumed by machines. Parsers collect row-level problems instead of dying
on the first bad line, so a 90k-row association file with three mangled
rows still loads (the bad rows are reported and skipped).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DIMENSIONS = ("care", "fairness", "loyalty", "authority", "sanctity")

HUMAN = "human"
LLM = "llm"

RESPONSE_HEADER = ("cue", "R1", "R2", "R3")
LEXICON_HEADER = ("word",) + DIMENSIONS

NORM_SCALES = {"arousal": (1.0, 8.0), "concreteness": (1.0, 5.0)}


class FormatError(ValueError):
    """An input file violates its documented schema."""


def normalize_token(token: str) -> str:
    """Lowercase, trim, and collapse internal whitespace to single spaces.

    Idempotent; multi-word responses stay single tokens with internal
    spaces. No stemming or lemmatization: surface forms are the nodes.
    """
    return " ".join(token.lower().split())


@dataclass(frozen=True)
class ResponseRecord:
    """One trial: a cue and the 0-3 responses it elicited."""

    cue: str
    responses: tuple[str, ...]
    source: str  # "human" or "llm"
    trial_id: int


@dataclass
class AssociationCorpus:
    """Raw (cue, response) trials with provenance."""

    records: list[ResponseRecord]
    row_errors: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def cues(self) -> list[str]:
        """Distinct cues in first-appearance order."""
        seen: dict[str, None] = {}
        for rec in self.records:
            seen.setdefault(rec.cue, None)
        return list(seen)

    def by_cue(self) -> dict[str, list[ResponseRecord]]:
        grouped: dict[str, list[ResponseRecord]] = {}
        for rec in self.records:
            grouped.setdefault(rec.cue, []).append(rec)
        return grouped


def parse_responses(path: str | Path, source: str) -> AssociationCorpus:
    """Read a response file (header ``cue,R1,R2,R3``) into a corpus.

    Empty response cells shorten the response list. Rows with an empty cue
    are skipped and reported in ``row_errors``. The optional trailing
    columns ``source,trial_id`` (as written by :func:`write_corpus`) are
    honoured when present; otherwise ``source`` comes from the argument and
    trials are numbered per cue in file order.
    """
    path = Path(path)
    errors: list[str] = []
    records: list[ResponseRecord] = []
    trial_counter: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header[:4]) != RESPONSE_HEADER:
            raise FormatError(
                f"{path}: expected header starting with {','.join(RESPONSE_HEADER)}"
            )
        extra = tuple(header[4:])
        if extra not in ((), ("source", "trial_id")):
            raise FormatError(f"{path}: unsupported extra columns {extra}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) > len(header):
                errors.append(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
                continue
            row = list(row) + [""] * (len(header) - len(row))
            cue = normalize_token(row[0])
            if not cue:
                errors.append(f"row {lineno}: empty cue")
                continue
            responses = tuple(
                tok for tok in (normalize_token(cell) for cell in row[1:4]) if tok
            )
            if extra:
                rec_source = row[4] or source
                try:
                    trial_id = int(row[5])
                except ValueError:
                    errors.append(f"row {lineno}: bad trial_id {row[5]!r}")
                    continue
            else:
                rec_source = source
                trial_id = trial_counter.get(cue, 0)
                trial_counter[cue] = trial_id + 1
            records.append(ResponseRecord(cue, responses, rec_source, trial_id))
    return AssociationCorpus(records, tuple(errors))


def write_corpus(corpus: AssociationCorpus, path: str | Path) -> None:
    """Write a corpus in the ``cue,R1,R2,R3,source,trial_id`` format."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESPONSE_HEADER + ("source", "trial_id"))
        for rec in corpus.records:
            cells = list(rec.responses) + [""] * (3 - len(rec.responses))
            writer.writerow([rec.cue, *cells, rec.source, rec.trial_id])


@dataclass
class MoralLexicon:
    """word -> five-dimension score vector (care, fairness, loyalty, authority, sanctity).

    ``hard`` lexicons carry seed assignments in {-1, 0, 1}; ``soft``
    lexicons carry crowd scores in [-1, 1], with NaN marking dimensions a
    word has no score on.
    """

    entries: dict[str, np.ndarray]
    kind: str  # "hard" or "soft"
    row_errors: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


def parse_moral_lexicon(path: str | Path, kind: str) -> MoralLexicon:
    """Read a ``word,care,fairness,loyalty,authority,sanctity`` lexicon.

    Hard kind accepts only scores in {-1, 0, 1} (empty cell = 0); soft kind
    accepts [-1, 1] (empty cell = NaN, meaning no score on that dimension).
    Rows violating the range rule, with an empty word, or repeating a word
    are skipped and reported in ``row_errors``.
    """
    if kind not in ("hard", "soft"):
        raise ValueError(f"unknown lexicon kind {kind!r}")
    path = Path(path)
    errors: list[str] = []
    entries: dict[str, np.ndarray] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != LEXICON_HEADER:
            raise FormatError(f"{path}: expected header {','.join(LEXICON_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(LEXICON_HEADER):
                errors.append(f"row {lineno}: expected {len(LEXICON_HEADER)} cells")
                continue
            word = normalize_token(row[0])
            if not word:
                errors.append(f"row {lineno}: empty word")
                continue
            if word in entries:
                errors.append(f"row {lineno}: duplicate word {word!r}")
                continue
            scores = np.zeros(5)
            ok = True
            for i, cell in enumerate(row[1:6]):
                cell = cell.strip()
                if not cell:
                    scores[i] = 0.0 if kind == "hard" else np.nan
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    errors.append(f"row {lineno}: non-numeric score {cell!r}")
                    ok = False
                    break
                if kind == "hard" and value not in (-1.0, 0.0, 1.0):
                    errors.append(f"row {lineno}: hard score {value} not in {{-1, 0, 1}}")
                    ok = False
                    break
                if not -1.0 <= value <= 1.0:
                    errors.append(f"row {lineno}: score {value} outside [-1, 1]")
                    ok = False
                    break
                scores[i] = value
            if ok:
                entries[word] = scores
    return MoralLexicon(entries, kind, tuple(errors))


@dataclass
class NormLexicon:
    """word -> scalar norm on a fixed scale (arousal 1-8, concreteness 1-5)."""

    entries: dict[str, float]
    scale_min: float
    scale_max: float
    kind: str
    row_errors: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


def parse_norm_lexicon(path: str | Path, kind: str) -> NormLexicon:
    """Read a ``word,score`` norm lexicon, range-checked against its scale."""
    if kind not in NORM_SCALES:
        raise ValueError(f"unknown norm kind {kind!r}")
    lo, hi = NORM_SCALES[kind]
    path = Path(path)
    errors: list[str] = []
    entries: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("word", "score"):
            raise FormatError(f"{path}: expected header word,score")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                errors.append(f"row {lineno}: expected 2 cells")
                continue
            word = normalize_token(row[0])
            if not word:
                errors.append(f"row {lineno}: empty word")
                continue
            if word in entries:
                errors.append(f"row {lineno}: duplicate word {word!r}")
                continue
            try:
                value = float(row[1])
            except ValueError:
                errors.append(f"row {lineno}: non-numeric score {row[1]!r}")
                continue
            if not lo <= value <= hi:
                errors.append(f"row {lineno}: score {value} outside [{lo}, {hi}]")
                continue
            entries[word] = value
    return NormLexicon(entries, lo, hi, kind, tuple(errors))


@dataclass
class EmbeddingTable:
    """word -> dense vector, all sharing one dimension."""

    entries: dict[str, np.ndarray]
    dimension: int

    def __len__(self) -> int:
        return len(self.entries)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load an embedding table.

    ``.bin`` files are read as the word2vec binary format (ascii header
    ``vocab_size dim``, then per entry a space-terminated word followed by
    ``dim`` little-endian float32 values). Anything else is CSV with
    header ``word,v1,...,vD``.
    """
    path = Path(path)
    if path.suffix == ".bin":
        return _load_word2vec_binary(path)
    entries: dict[str, np.ndarray] = {}
    dimension = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "word" or len(header) < 2:
            raise FormatError(f"{path}: expected header word,v1,...,vD")
        dimension = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dimension + 1:
                raise FormatError(f"{path}: row {lineno} has {len(row) - 1} values, expected {dimension}")
            word = normalize_token(row[0])
            entries[word] = np.array([float(c) for c in row[1:]], dtype=np.float64)
    if dimension == 0:
        raise FormatError(f"{path}: zero-length vectors")
    return EmbeddingTable(entries, dimension)


def _load_word2vec_binary(path: Path) -> EmbeddingTable:
    with path.open("rb") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: bad word2vec header")
        vocab_size, dimension = int(header[0]), int(header[1])
        if dimension <= 0:
            raise FormatError(f"{path}: zero-length vectors")
        entries: dict[str, np.ndarray] = {}
        vec_bytes = 4 * dimension
        for _ in range(vocab_size):
            chars = bytearray()
            while True:
                ch = fh.read(1)
                if not ch:
                    raise FormatError(f"{path}: truncated word2vec file")
                if ch == b" ":
                    break
                if ch != b"\n":  # some writers prepend newlines to words
                    chars.extend(ch)
            raw = fh.read(vec_bytes)
            if len(raw) != vec_bytes:
                raise FormatError(f"{path}: truncated vector data")
            vec = np.frombuffer(raw, dtype="<f4").astype(np.float64)
            word = normalize_token(chars.decode("utf-8", errors="replace"))
            entries[word] = vec
    return EmbeddingTable(entries, dimension)


@dataclass
class Report:
    """A small named-column table; first column is the primary key."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)


def _format_cell(value) -> str:
    if isinstance(value, (np.floating, float)):
        return "%.6g" % float(value)
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def _round_sig(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if np.isnan(value) else float("%.6g" % value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_report(report: Report, path: str | Path, format: str = "csv") -> None:
    """Write a report with deterministic row order and 6-significant-digit floats.

    Rows are sorted by the first (primary key) column; ``csv`` and ``json``
    (array of objects) are supported.
    """
    path = Path(path)
    rows = sorted(report.rows, key=lambda r: r[0])
    if format == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(report.columns)
            for row in rows:
                writer.writerow([_format_cell(c) for c in row])
    elif format == "json":
        payload = [
            {col: _round_sig(cell) for col, cell in zip(report.columns, row)}
            for row in rows
        ]
        with path.open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {format!r}")


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_report(path: str | Path, format: str = "csv") -> Report:
    """Read back a report written by :func:`write_report`."""
    path = Path(path)
    if format == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise FormatError(f"{path}: empty report")
            rows = [tuple(_parse_cell(c) for c in row) for row in reader]
        return Report(tuple(header), rows)
    if format == "json":
        with path.open(encoding="utf-8") as fh:
            payload = json.load(fh)
        if not payload:
            return Report((), [])
        columns = tuple(payload[0])
        rows = [
            tuple(np.nan if obj[c] is None else obj[c] for c in columns)
            for obj in payload
        ]
        return Report(columns, rows)
    raise ValueError(f"unknown report format {format!r}")
