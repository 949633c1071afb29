"""Collect word-association corpora from a chat-completion endpoint.

The request protocol mirrors the original human data collection: a fixed
instruction asking for the first three words that come to mind, one cue
per request, many repeats per cue. Completions are parsed leniently (one
salvage heuristic), raw texts are checkpointed so interrupted runs resume
without re-spending requests, and the checkpoint doubles as the audit log.
"""

from __future__ import annotations

import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import requests

from .data_io import LLM, AssociationCorpus, ResponseRecord, normalize_token
from .evaluation import spearman

log = logging.getLogger(__name__)

API_KEY_ENV = "MORALGRAPH_API_KEY"

# Instruction shown verbatim to the model; identical to the one used for
# the human participants so the two corpora stay comparable.
ASSOCIATION_INSTRUCTIONS = (
    "Background: On average, an adult knows about 40,000 words, but what do "
    "these words mean to people like you and me? You can help scientists "
    "understand how meaning is organized in our mental dictionary by playing "
    "the game of word associations. This game is easy: Just give the first "
    "three words that come to mind for a given cue word.\n\n"
    "Output Format: Output your response in the following format:\n\n"
    "response1, response2, response3\n\n"
    "Do not provide any additional context or explanations. Just the words "
    "as comma-separated values."
)

Transport = Callable[[dict], str]


class ElicitationError(RuntimeError):
    """The endpoint failed for a request after all retries."""


@dataclass
class ElicitationConfig:
    endpoint: str
    model: str
    temperature: float = 1.0
    repeats_per_cue: int = 100
    max_responses: int = 3
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrent: int = 4

    def __post_init__(self) -> None:
        if self.repeats_per_cue < 2:
            raise ValueError("repeats_per_cue must be at least 2 (split-half needs two halves)")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


def build_prompt(cue: str) -> list[dict[str, str]]:
    """System + user chat messages for one cue (normalized first)."""
    cue = normalize_token(cue)
    if not cue:
        raise ValueError("cue is empty after normalization")
    return [
        {"role": "system", "content": ASSOCIATION_INSTRUCTIONS},
        {"role": "user", "content": f"Cue word: {cue}"},
    ]


def parse_completion(text: str, max_responses: int = 3) -> list[str]:
    """Extract up to ``max_responses`` tokens from a raw completion.

    A prefix ending in a colon is stripped (the one salvage heuristic,
    catching "Here are three words: a, b, c"), the rest splits on commas,
    tokens are normalized and must contain an alphanumeric character. An
    empty result marks the completion malformed.
    """
    if ":" in text:
        text = text.rsplit(":", 1)[1]
    tokens = []
    for part in text.split(","):
        token = normalize_token(part)
        if token and any(ch.isalnum() for ch in token):
            tokens.append(token)
    return tokens[:max_responses]


class HttpTransport:
    """POST chat payloads to an OpenAI-style endpoint, with retry backoff.

    The API key, when needed, comes from the environment variable named by
    ``API_KEY_ENV`` and is sent as a bearer token.
    """

    def __init__(self, config: ElicitationConfig):
        self.config = config
        self._session = requests.Session()

    def __call__(self, payload: dict) -> str:
        headers = {}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = self._session.post(
                    self.config.endpoint,
                    json=payload,
                    timeout=self.config.timeout,
                    headers=headers,
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last = exc
                if attempt < self.config.max_retries:
                    time.sleep(0.5 * 2**attempt)
        raise ElicitationError(f"endpoint failed after {self.config.max_retries + 1} attempts: {last}")


@dataclass
class ElicitationResult:
    corpus: AssociationCorpus
    malformed_rate: float
    flagged_cues: tuple[str, ...]  # cues with >50% malformed completions
    cue_errors: dict[str, str]
    completed: int
    failed: int


def _load_checkpoint(path: Path) -> dict[tuple[str, int], str]:
    done: dict[tuple[str, int], str] = {}
    if not path.exists():
        return done
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            done[(entry["cue"], int(entry["trial_id"]))] = entry["text"]
    return done


def elicit_corpus(
    cues: Sequence[str],
    config: ElicitationConfig,
    transport: Transport | None = None,
    checkpoint_path: str | Path | None = None,
) -> ElicitationResult:
    """Request ``repeats_per_cue`` completions per cue and build a corpus.

    Raw completions are appended to the checkpoint file as they arrive;
    trials already present there are not re-requested, so a rerun resumes
    where the previous one stopped. Endpoint failures are recorded per cue
    and the run continues.
    """
    ordered: list[str] = []
    for cue in cues:
        tok = normalize_token(cue)
        if tok and tok not in ordered:
            ordered.append(tok)
    if not ordered:
        raise ValueError("no cues to elicit")
    if transport is None:
        transport = HttpTransport(config)

    ckpt = Path(checkpoint_path) if checkpoint_path else None
    done = _load_checkpoint(ckpt) if ckpt else {}
    pending = [
        (cue, trial)
        for cue in ordered
        for trial in range(config.repeats_per_cue)
        if (cue, trial) not in done
    ]
    errors: dict[str, str] = {}
    failed = 0

    def request(cue: str) -> str:
        payload = {
            "model": config.model,
            "messages": build_prompt(cue),
            "temperature": config.temperature,
            "n": 1,
        }
        return transport(payload)

    if pending:
        ckpt_fh = ckpt.open("a", encoding="utf-8") if ckpt else None
        try:
            with ThreadPoolExecutor(max_workers=config.max_concurrent) as pool:
                queue = iter(pending)
                in_flight: dict = {}

                def submit_next() -> None:
                    item = next(queue, None)
                    if item is not None:
                        in_flight[pool.submit(request, item[0])] = item

                for _ in range(config.max_concurrent * 4):
                    submit_next()
                while in_flight:
                    finished, _ = wait(in_flight, return_when=FIRST_COMPLETED)
                    for future in finished:
                        cue, trial = in_flight.pop(future)
                        try:
                            text = future.result()
                        except Exception as exc:  # noqa: BLE001 - recorded, run continues
                            errors[cue] = str(exc)
                            failed += 1
                        else:
                            done[(cue, trial)] = text
                            if ckpt_fh is not None:
                                ckpt_fh.write(
                                    json.dumps(
                                        {"cue": cue, "trial_id": trial, "text": text},
                                        ensure_ascii=False,
                                    )
                                    + "\n"
                                )
                                ckpt_fh.flush()
                        submit_next()
        finally:
            if ckpt_fh is not None:
                ckpt_fh.close()

    records: list[ResponseRecord] = []
    malformed = 0
    malformed_by_cue: Counter = Counter()
    done_by_cue: Counter = Counter()
    for cue in ordered:
        for trial in range(config.repeats_per_cue):
            text = done.get((cue, trial))
            if text is None:
                continue
            tokens = parse_completion(text, config.max_responses)
            if not tokens:
                malformed += 1
                malformed_by_cue[cue] += 1
            done_by_cue[cue] += 1
            records.append(ResponseRecord(cue, tuple(tokens), LLM, trial))
    flagged = tuple(
        cue for cue in ordered if done_by_cue[cue] and malformed_by_cue[cue] / done_by_cue[cue] > 0.5
    )
    completed = len(records)
    if failed:
        log.warning("%d requests failed across %d cues", failed, len(errors))
    return ElicitationResult(
        corpus=AssociationCorpus(records),
        malformed_rate=malformed / completed if completed else 0.0,
        flagged_cues=flagged,
        cue_errors=errors,
        completed=completed,
        failed=failed,
    )


def variability(corpus: AssociationCorpus, cues: Iterable[str]) -> int:
    """Number of distinct response types over all trials for the given cues."""
    wanted = {normalize_token(c) for c in cues}
    types = {
        token
        for rec in corpus.records
        if rec.cue in wanted
        for token in rec.responses
    }
    return len(types)


def spearman_brown(r_half: float) -> float:
    """Split-half correction 2r/(1+r); undefined at r = -1."""
    if r_half <= -1.0:
        return float("nan")
    return 2.0 * r_half / (1.0 + r_half)


def _strength_map(records: Sequence[ResponseRecord]) -> dict[str, float]:
    counts = Counter(token for rec in records for token in rec.responses)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {token: count / total for token, count in counts.items()}


def split_half_reliability(
    corpus: AssociationCorpus, cue: str, rng: np.random.Generator
) -> float | None:
    """Spearman-Brown reliability of one random split of a cue's trials.

    Trials are shuffled and halved; each half's association strengths are
    rank-correlated on the response types shared by both halves. Returns
    None when fewer than 3 types are shared or the correlation degenerates.
    """
    cue = normalize_token(cue)
    records = [rec for rec in corpus.records if rec.cue == cue]
    if len(records) < 2:
        raise ValueError(f"cue {cue!r} has fewer than 2 trials")
    order = rng.permutation(len(records))
    half = len(records) // 2
    first = _strength_map([records[i] for i in order[:half]])
    second = _strength_map([records[i] for i in order[half:]])
    shared = sorted(set(first) & set(second))
    if len(shared) < 3:
        return None
    r_half, _ = spearman([first[t] for t in shared], [second[t] for t in shared])
    if np.isnan(r_half):
        return None
    return spearman_brown(r_half)


def corpus_reliability(
    corpus: AssociationCorpus,
    cues: Iterable[str],
    splits: int = 10,
    rng: np.random.Generator | None = None,
) -> tuple[float, int]:
    """Mean reliability over cues, each averaged over random splits.

    Returns ``(mean, cues_counted)``; cues with no defined split (shared
    response set too small on every try) are skipped, and the mean is NaN
    when nothing was countable.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    by_cue = corpus.by_cue()
    per_cue = []
    for cue in cues:
        cue = normalize_token(cue)
        if len(by_cue.get(cue, [])) < 2:
            continue
        values = []
        for _ in range(splits):
            value = split_half_reliability(corpus, cue, rng)
            if value is not None:
                values.append(value)
        if values:
            per_cue.append(float(np.mean(values)))
    if not per_cue:
        return float("nan"), 0
    return float(np.mean(per_cue)), len(per_cue)


@dataclass
class TemperaturePoint:
    temperature: float
    variability_gap: float
    reliability_gap: float
    objective: float


@dataclass
class SweepResult:
    points: list[TemperaturePoint]
    chosen_temperature: float


def sweep_temperature(
    cues: Sequence[str],
    temperatures: Sequence[float],
    human_reference: AssociationCorpus,
    config: ElicitationConfig,
    transport: Transport | None = None,
    splits: int = 10,
    seed: int = 0,
) -> SweepResult:
    """Elicit at each temperature and pick the one closest to the human reference.

    The objective sums the variability gap and the reliability gap, each
    normalized by the human reference value (absolute gaps when a reference
    is zero or undefined). Ties break toward the lower temperature.
    """
    if not temperatures:
        raise ValueError("no temperatures to sweep")
    human_var = variability(human_reference, cues)
    human_rel, _ = corpus_reliability(
        human_reference, cues, splits, np.random.default_rng([seed, 0])
    )
    points: list[TemperaturePoint] = []
    for temperature in temperatures:
        try:
            result = elicit_corpus(cues, replace(config, temperature=temperature), transport)
        except ElicitationError as exc:
            log.warning("temperature %s failed: %s", temperature, exc)
            continue
        if not result.corpus.records:
            log.warning("temperature %s produced no records", temperature)
            continue
        var = variability(result.corpus, cues)
        rel, _ = corpus_reliability(
            result.corpus, cues, splits, np.random.default_rng([seed, 1 + int(temperature * 1000)])
        )
        var_gap = abs(var - human_var)
        rel_gap = abs(rel - human_rel) if not (np.isnan(rel) or np.isnan(human_rel)) else float("nan")
        objective = var_gap / human_var if human_var else float(var_gap)
        if not np.isnan(rel_gap):
            objective += rel_gap / abs(human_rel) if human_rel else rel_gap
        points.append(TemperaturePoint(temperature, var_gap, rel_gap, objective))
    if not points:
        raise RuntimeError("every temperature failed to produce a corpus")
    chosen = min(points, key=lambda p: (p.objective, p.temperature))
    return SweepResult(points, chosen.temperature)
