"""Error taxonomy, annotation-sheet export, and segmentation statistics.

Every prediction falls into exactly one of four categories (correct,
wrong candidate, overnormalized, undernormalized). Segmentation stats
summarize how a tokenizer carves the raw text: byte-level (each UTF-8
byte is a subword) or greedy longest-match against a ranked vocabulary —
an approximation of real subword algorithms, good for trends only.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from lexnorm.corpus import Corpus, compare_form, needs_normalization
from lexnorm.detection import DetectionLabels
from lexnorm.errors import AlignmentError, SamplingError, SegmentationError
from lexnorm.metrics import RunOutput

SHEET_HEADER = ("context", "raw", "prediction", "gold", "sub_category")


class ErrorCategory(Enum):
    CORRECT = "correct"
    WRONG_CANDIDATE = "wrong_candidate"
    OVERNORMALIZED = "overnormalized"
    UNDERNORMALIZED = "undernormalized"


def categorize_errors(
    gold: Corpus, run: RunOutput
) -> tuple[list[ErrorCategory], Counter]:
    """Assign one category per token; also return the category histogram."""
    if len(run.predictions) != gold.n_tokens:
        raise AlignmentError(
            f"run has {len(run.predictions)} predictions, "
            f"corpus has {gold.n_tokens} tokens"
        )
    cats: list[ErrorCategory] = []
    for tok, pred in zip(gold.tokens(), run.predictions):
        p = compare_form(pred, gold.caseless)
        g = compare_form(tok.norm, gold.caseless)
        r = compare_form(tok.raw, gold.caseless)
        if r == g:
            cats.append(
                ErrorCategory.CORRECT if p == r else ErrorCategory.OVERNORMALIZED
            )
        elif p == g:
            cats.append(ErrorCategory.CORRECT)
        elif p == r:
            cats.append(ErrorCategory.UNDERNORMALIZED)
        else:
            cats.append(ErrorCategory.WRONG_CANDIDATE)
    return cats, Counter(cats)


@dataclass(frozen=True)
class SegStats:
    chars_per_subword: float
    subwords_per_word: float
    tokenizer_id: str

    def __post_init__(self) -> None:
        if self.chars_per_subword <= 0 or self.subwords_per_word <= 0:
            raise ValueError("segmentation ratios must be positive")


def seg_stats_bytes(c: Corpus) -> SegStats:
    """Byte-level tokenizer view: every UTF-8 byte of a raw token is a subword."""
    chars = 0
    subwords = 0
    words = 0
    for tok in c.tokens():
        chars += len(tok.raw)
        subwords += len(tok.raw.encode("utf-8"))
        words += 1
    if words == 0:
        raise ValueError("cannot compute segmentation stats on an empty corpus")
    return SegStats(
        chars_per_subword=chars / subwords,
        subwords_per_word=subwords / words,
        tokenizer_id="bytes",
    )


def segment_greedy(
    word: str, vocab: Sequence[str], byte_fallback: bool = False
) -> list[str]:
    """Greedy longest-match segmentation; unknown chars need byte_fallback."""
    entries = set(vocab)
    if not entries:
        raise ValueError("vocabulary is empty")
    longest = max(len(v) for v in entries)
    pieces: list[str] = []
    i = 0
    while i < len(word):
        for length in range(min(longest, len(word) - i), 0, -1):
            piece = word[i : i + length]
            if piece in entries:
                pieces.append(piece)
                i += length
                break
        else:
            if not byte_fallback:
                raise SegmentationError(
                    f"cannot segment {word!r}: no vocab entry covers "
                    f"{word[i]!r} (U+{ord(word[i]):04X})"
                )
            pieces.extend(f"<0x{b:02X}>" for b in word[i].encode("utf-8"))
            i += 1
    return pieces


def seg_stats_vocab(
    c: Corpus,
    vocab: Sequence[str],
    tokenizer_id: str = "vocab",
    byte_fallback: bool = False,
) -> SegStats:
    chars = 0
    subwords = 0
    words = 0
    for tok in c.tokens():
        chars += len(tok.raw)
        subwords += len(segment_greedy(tok.raw, vocab, byte_fallback))
        words += 1
    if words == 0:
        raise ValueError("cannot compute segmentation stats on an empty corpus")
    return SegStats(
        chars_per_subword=chars / subwords,
        subwords_per_word=subwords / words,
        tokenizer_id=tokenizer_id,
    )


def load_vocab(path: str | Path) -> list[str]:
    """One subword per line; line order is rank order."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line for line in lines if line]


def export_annotation_sheet(
    gold: Corpus,
    run: RunOutput,
    labels: DetectionLabels,
    sample_size: int,
    seed: int,
) -> str:
    """TSV sheet of sampled flagged instances with a blank sub-category column."""
    if len(run.predictions) != gold.n_tokens:
        raise AlignmentError("run and corpus are not aligned")
    if len(labels.labels) != gold.n_tokens:
        raise AlignmentError("labels and corpus are not aligned")
    rows = []
    gidx = 0
    for sentence in gold.sentences:
        raw_tokens = [t.raw for t in sentence.tokens]
        for lidx, tok in enumerate(sentence.tokens):
            if labels.labels[gidx]:
                context = list(raw_tokens)
                context[lidx] = f"[[{context[lidx]}]]"
                rows.append(
                    (" ".join(context), tok.raw, run.predictions[gidx], tok.norm)
                )
            gidx += 1
    if sample_size > len(rows):
        raise SamplingError(
            f"asked for {sample_size} instances but only {len(rows)} are flagged"
        )
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(rows)), sample_size))
    lines = ["\t".join(SHEET_HEADER)]
    for i in picked:
        lines.append("\t".join(rows[i]) + "\t")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SheetSummary:
    counts: dict
    proportions: dict
    n_rows: int
    n_labeled: int


def summarize_annotation_sheet(text: str) -> SheetSummary:
    """Histogram of the filled-in sub-category column of a completed sheet."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].split("\t")[: len(SHEET_HEADER)] != list(SHEET_HEADER):
        raise ValueError("not an annotation sheet: header mismatch")
    counts: Counter = Counter()
    n_rows = 0
    for line in lines[1:]:
        parts = line.split("\t")
        n_rows += 1
        label = parts[4].strip() if len(parts) > 4 else ""
        if label:
            counts[label] += 1
    labeled = sum(counts.values())
    proportions = {k: v / labeled for k, v in counts.items()} if labeled else {}
    return SheetSummary(
        counts=dict(counts),
        proportions=proportions,
        n_rows=n_rows,
        n_labeled=labeled,
    )
