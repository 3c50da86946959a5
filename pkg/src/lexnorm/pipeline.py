"""Few-shot LLM normalization stage and full pipeline assembly.

Flagged tokens that survive the lookup stage are sent to an LLM one at a
time: the prompt shows k solved exemplars, then the query sentence with
the target word wrapped in markers. Backends: Http (chat-completion
contract), Replay (answers only from a prompt cache), Echo (returns the
marked word — an offline identity normalizer for tests). Every call is
recorded with token counts so runs can be costed.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import random
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence

import requests

from lexnorm.corpus import Corpus, Sentence, needs_normalization
from lexnorm.detection import DetectionLabels
from lexnorm.errors import (
    AlignmentError,
    BackendError,
    CacheMissError,
    MarkerCollisionError,
    PipelineAborted,
    SamplingError,
)
from lexnorm.lookup import GatedLookup, apply_lookup
from lexnorm.metrics import RunOutput

# per 1M tokens
DEFAULT_INPUT_PRICE = 2.50
DEFAULT_OUTPUT_PRICE = 10.00

_MAX_MARKER_ESCALATIONS = 16


def default_instruction() -> str:
    text = resources.files("lexnorm").joinpath("data/instruction.txt").read_text(
        encoding="utf-8"
    )
    return text.rstrip("\n")


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _estimate_tokens(text: str) -> int:
    # crude bytes/4 fallback when the backend reports no usage
    if not text:
        return 0
    return max(1, len(text.encode("utf-8")) // 4)


class BackendKind(Enum):
    HTTP = "http"
    ECHO = "echo"
    REPLAY = "replay"


@dataclass(frozen=True)
class PromptSpec:
    k_shots: int = 8
    seed: int = 0
    marker_open: str = "<<"
    marker_close: str = ">>"
    instruction: str = field(default_factory=default_instruction)
    max_output_chars_factor: float = 5.0

    def __post_init__(self) -> None:
        if self.k_shots < 0:
            raise ValueError("k_shots must be >= 0")
        if not self.marker_open or not self.marker_close:
            raise ValueError("markers must be non-empty")
        if self.max_output_chars_factor <= 0:
            raise ValueError("max_output_chars_factor must be positive")


@dataclass(frozen=True)
class LlmBackendConfig:
    kind: BackendKind
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    api_key: Optional[str] = None
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0
    input_price: float = DEFAULT_INPUT_PRICE
    output_price: float = DEFAULT_OUTPUT_PRICE
    cache_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is BackendKind.HTTP and not (self.endpoint and self.model_name):
            raise ValueError("http backend requires endpoint and model_name")
        if self.kind is BackendKind.REPLAY and not self.cache_path:
            raise ValueError("replay backend requires cache_path")
        if self.input_price < 0 or self.output_price < 0:
            raise ValueError("prices must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class CallRecord:
    prompt_hash: str
    input_tokens: int
    output_tokens: int
    response: str
    latency: float
    refused: bool = False
    usage_estimated: bool = False
    token_index: int = -1

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    detection: DetectionLabels
    prompt: PromptSpec
    backend: LlmBackendConfig
    use_lookup: bool = True
    lookup: Optional[GatedLookup] = None
    concurrency_limit: int = 1
    # resample exemplars per token (seed offset by token index) instead of
    # once per run; defeats prompt caching, kept for replication sweeps
    resample_shots: bool = False

    def __post_init__(self) -> None:
        if self.use_lookup and self.lookup is None:
            raise ValueError("use_lookup requires a lookup table")
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be >= 1")


@dataclass(frozen=True)
class Shot:
    """One solved exemplar: a sentence with its target marked, and the answer."""

    marked_sentence: str
    replacement: str


@dataclass(frozen=True)
class BackendReply:
    text: str
    input_tokens: int
    output_tokens: int
    usage_estimated: bool = False


class Backend(Protocol):
    def complete(self, prompt: str) -> BackendReply: ...


def mark_sentence(
    raw_tokens: Sequence[str], target_index: int, marker_open: str, marker_close: str
) -> str:
    if not 0 <= target_index < len(raw_tokens):
        raise IndexError(f"target index {target_index} out of range")
    words = list(raw_tokens)
    words[target_index] = f"{marker_open}{words[target_index]}{marker_close}"
    return " ".join(words)


def resolve_markers(spec: PromptSpec, corpora: Sequence[Corpus]) -> tuple[str, str]:
    """Pick markers absent from every raw token, doubling on collision."""
    vocab = {tok.raw for c in corpora for tok in c.tokens()}
    mo, mc = spec.marker_open, spec.marker_close
    for _ in range(_MAX_MARKER_ESCALATIONS):
        if not any(mo in w or mc in w for w in vocab):
            return mo, mc
        mo, mc = mo * 2, mc * 2
    raise MarkerCollisionError(
        f"could not find collision-free markers derived from "
        f"{spec.marker_open!r}/{spec.marker_close!r}"
    )


def sample_shots(
    train: Corpus,
    k: int,
    seed: int,
    marker_open: str = "<<",
    marker_close: str = ">>",
) -> list[Shot]:
    """Draw k distinct needs-normalization tokens uniformly, seeded."""
    if k == 0:
        return []
    positives = [
        (si, ti)
        for si, sentence in enumerate(train.sentences)
        for ti, tok in enumerate(sentence.tokens)
        if needs_normalization(tok, train.caseless)
    ]
    if k > len(positives):
        raise SamplingError(
            f"asked for {k} shots but the corpus has only "
            f"{len(positives)} tokens needing normalization"
        )
    rng = random.Random(seed)
    shots = []
    for si, ti in rng.sample(positives, k):
        sentence = train.sentences[si]
        marked = mark_sentence(
            [t.raw for t in sentence.tokens], ti, marker_open, marker_close
        )
        shots.append(Shot(marked_sentence=marked, replacement=sentence.tokens[ti].norm))
    return shots


def build_prompt(
    spec: PromptSpec,
    shots: Sequence[Shot],
    sentence: Sentence,
    target_index: int,
    marker_open: Optional[str] = None,
    marker_close: Optional[str] = None,
) -> str:
    """Assemble the byte-stable prompt; its bytes are the cache key."""
    mo = marker_open if marker_open is not None else spec.marker_open
    mc = marker_close if marker_close is not None else spec.marker_close
    raw_tokens = [t.raw for t in sentence.tokens]
    for word in raw_tokens:
        if mo in word or mc in word:
            raise MarkerCollisionError(
                f"token {word!r} contains the marker; escalate markers first"
            )
    instruction = spec.instruction.replace("{marker_open}", mo).replace(
        "{marker_close}", mc
    )
    blocks = [instruction]
    for shot in shots:
        blocks.append(f"Sentence: {shot.marked_sentence}\nAnswer: {shot.replacement}")
    query = mark_sentence(raw_tokens, target_index, mo, mc)
    blocks.append(f"Sentence: {query}\nAnswer:")
    return "\n\n".join(blocks)


class PromptCache:
    """Append-only JSONL response store keyed by sha256 of the prompt bytes.

    Later records win on duplicate keys, so concurrent appends of identical
    prompts are harmless (their values are identical by construction).
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._entries[rec["prompt_hash"]] = rec

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, prompt: str) -> Optional[dict]:
        return self._entries.get(prompt_digest(prompt))

    def put(
        self, prompt: str, response: str, input_tokens: int, output_tokens: int
    ) -> dict:
        rec = {
            "prompt_hash": prompt_digest(prompt),
            "prompt": prompt,
            "response": response,
            "input_tokens": input_tokens,
            "output_tokens": output_tokens,
        }
        with self._lock:
            self._entries[rec["prompt_hash"]] = rec
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return rec


class EchoBackend:
    """Returns the marked target word unchanged: the identity normalizer."""

    def __init__(self, marker_open: str = "<<", marker_close: str = ">>"):
        self.marker_open = marker_open
        self.marker_close = marker_close

    def complete(self, prompt: str) -> BackendReply:
        start = prompt.rfind(self.marker_open)
        if start < 0:
            raise BackendError("echo backend found no marked word in the prompt")
        start += len(self.marker_open)
        end = prompt.find(self.marker_close, start)
        if end < 0:
            raise BackendError("echo backend found an unterminated marker")
        word = prompt[start:end]
        return BackendReply(
            text=word,
            input_tokens=_estimate_tokens(prompt),
            output_tokens=_estimate_tokens(word),
            usage_estimated=True,
        )


class ReplayBackend:
    """Answers exclusively from a prompt cache; offline reproduction."""

    def __init__(self, cache: PromptCache):
        self.cache = cache

    def complete(self, prompt: str) -> BackendReply:
        rec = self.cache.get(prompt)
        if rec is None:
            raise CacheMissError(
                f"no cached response for prompt {prompt_digest(prompt)[:12]}…"
            )
        return BackendReply(
            text=rec["response"],
            input_tokens=rec["input_tokens"],
            output_tokens=rec["output_tokens"],
        )


class HttpBackend:
    """Chat-completion-compatible HTTP client with bounded retries."""

    def __init__(self, cfg: LlmBackendConfig):
        if cfg.kind is not BackendKind.HTTP:
            raise ValueError("HttpBackend requires an http config")
        self.cfg = cfg
        self.requests_made = 0

    def complete(self, prompt: str) -> BackendReply:
        cfg = self.cfg
        url = cfg.endpoint.rstrip("/") + "/chat/completions"
        payload = {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        last_error = "no attempt made"
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(min(8.0, 0.5 * 2 ** (attempt - 1)))
            self.requests_made += 1
            try:
                resp = requests.post(
                    url, json=payload, headers=headers, timeout=cfg.timeout
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
                text = body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion response: {exc}") from exc
            usage = body.get("usage") or {}
            if "prompt_tokens" in usage and "completion_tokens" in usage:
                return BackendReply(
                    text=text,
                    input_tokens=int(usage["prompt_tokens"]),
                    output_tokens=int(usage["completion_tokens"]),
                )
            return BackendReply(
                text=text,
                input_tokens=_estimate_tokens(prompt),
                output_tokens=_estimate_tokens(text),
                usage_estimated=True,
            )
        raise BackendError(
            f"request failed after {cfg.max_retries + 1} attempts: {last_error}"
        )


class CachingBackend:
    """Consults the prompt cache before the wrapped backend; stores fresh replies."""

    def __init__(self, inner: Backend, cache: PromptCache):
        self.inner = inner
        self.cache = cache

    def complete(self, prompt: str) -> BackendReply:
        rec = self.cache.get(prompt)
        if rec is not None:
            return BackendReply(
                text=rec["response"],
                input_tokens=rec["input_tokens"],
                output_tokens=rec["output_tokens"],
            )
        reply = self.inner.complete(prompt)
        self.cache.put(prompt, reply.text, reply.input_tokens, reply.output_tokens)
        return reply


def make_backend(
    cfg: LlmBackendConfig, marker_open: str = "<<", marker_close: str = ">>"
) -> Backend:
    if cfg.kind is BackendKind.REPLAY:
        return ReplayBackend(PromptCache(cfg.cache_path))
    if cfg.kind is BackendKind.ECHO:
        backend: Backend = EchoBackend(marker_open, marker_close)
    else:
        backend = HttpBackend(cfg)
    if cfg.cache_path:
        return CachingBackend(backend, PromptCache(cfg.cache_path))
    return backend


def normalize_token_llm(
    backend: Backend,
    prompt: str,
    raw: str,
    spec: PromptSpec,
    marker_open: Optional[str] = None,
    marker_close: Optional[str] = None,
    token_index: int = -1,
) -> tuple[str, CallRecord]:
    """One LLM call with post-processing; refusals fall back to the raw word."""
    mo = marker_open if marker_open is not None else spec.marker_open
    mc = marker_close if marker_close is not None else spec.marker_close
    started = time.monotonic()
    reply = backend.complete(prompt)
    latency = time.monotonic() - started
    stripped = reply.text.strip()
    first = stripped.splitlines()[0].strip() if stripped else ""
    refused = (
        not first
        or mo in first
        or mc in first
        or len(first) > spec.max_output_chars_factor * len(raw)
    )
    record = CallRecord(
        prompt_hash=prompt_digest(prompt),
        input_tokens=reply.input_tokens,
        output_tokens=reply.output_tokens,
        response=reply.text,
        latency=latency,
        refused=refused,
        usage_estimated=reply.usage_estimated,
        token_index=token_index,
    )
    return (raw if refused else first), record


def run_pipeline(
    cfg: PipelineConfig,
    test: Corpus,
    train: Corpus,
    backend: Optional[Backend] = None,
) -> tuple[RunOutput, list[CallRecord]]:
    """Detection → lookup → LLM; output aligned one-to-one with test tokens."""
    labels = cfg.detection
    if len(labels.labels) != test.n_tokens:
        raise AlignmentError(
            f"detection labels cover {len(labels.labels)} tokens, "
            f"corpus has {test.n_tokens}"
        )
    mo, mc = resolve_markers(cfg.prompt, (test, train))
    if backend is None:
        backend = make_backend(cfg.backend, mo, mc)
    shots = sample_shots(train, cfg.prompt.k_shots, cfg.prompt.seed, mo, mc)

    if cfg.use_lookup:
        partial: list[Optional[str]] = apply_lookup(cfg.lookup, test, labels)
    else:
        partial = [
            tok.raw if not flag else None
            for tok, flag in zip(test.tokens(), labels.labels)
        ]

    pending = []
    gidx = 0
    for sentence in test.sentences:
        for lidx, tok in enumerate(sentence.tokens):
            if partial[gidx] is None:
                pending.append((gidx, sentence, lidx, tok.raw))
            gidx += 1

    def _call(item: tuple[int, Sentence, int, str]) -> tuple[int, str, CallRecord]:
        idx, sent, local, raw = item
        exemplars = shots
        if cfg.resample_shots:
            exemplars = sample_shots(
                train, cfg.prompt.k_shots, cfg.prompt.seed + idx, mo, mc
            )
        prompt = build_prompt(
            cfg.prompt, exemplars, sent, local, marker_open=mo, marker_close=mc
        )
        out, rec = normalize_token_llm(
            backend, prompt, raw, cfg.prompt,
            marker_open=mo, marker_close=mc, token_index=idx,
        )
        return idx, out, rec

    results: list[tuple[int, str, CallRecord]] = []
    failure: Optional[BackendError] = None
    if cfg.concurrency_limit > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency_limit) as pool:
            futures = [pool.submit(_call, item) for item in pending]
            for fut in as_completed(futures):
                try:
                    results.append(fut.result())
                except BackendError as exc:
                    failure = exc
    else:
        for item in pending:
            try:
                results.append(_call(item))
            except BackendError as exc:
                failure = exc
                break

    results.sort(key=lambda r: r[0])  # merge deterministically in token order
    records: list[CallRecord] = []
    for idx, out, rec in results:
        partial[idx] = out
        records.append(rec)
    if failure is not None:
        raise PipelineAborted(failure, partial=list(partial), records=records)
    return RunOutput(predictions=tuple(partial)), records


@dataclass(frozen=True)
class CostReport:
    input_tokens: int
    output_tokens: int
    cost: float
    input_price: float
    output_price: float
    usage_estimated: bool
    counterfactual_tokens: Optional[int] = None
    reduction_pct: Optional[float] = None


def cost_from_counts(
    input_tokens: int,
    output_tokens: int,
    input_price: float = DEFAULT_INPUT_PRICE,
    output_price: float = DEFAULT_OUTPUT_PRICE,
) -> float:
    return input_tokens * input_price / 1e6 + output_tokens * output_price / 1e6


def token_reduction_pct(counterfactual: int, actual: int) -> float:
    """Percentage of tokens saved versus the all-tokens counterfactual."""
    if counterfactual <= 0:
        raise ValueError("counterfactual token count must be positive")
    return 100.0 * (1.0 - actual / counterfactual)


def estimate_cost(
    records: Sequence[CallRecord],
    cfg: LlmBackendConfig,
    counterfactual_tokens: Optional[int] = None,
) -> CostReport:
    tin = sum(r.input_tokens for r in records)
    tout = sum(r.output_tokens for r in records)
    reduction = None
    if counterfactual_tokens is not None:
        reduction = token_reduction_pct(counterfactual_tokens, tin + tout)
    return CostReport(
        input_tokens=tin,
        output_tokens=tout,
        cost=cost_from_counts(tin, tout, cfg.input_price, cfg.output_price),
        input_price=cfg.input_price,
        output_price=cfg.output_price,
        usage_estimated=any(r.usage_estimated for r in records),
        counterfactual_tokens=counterfactual_tokens,
        reduction_pct=reduction,
    )
