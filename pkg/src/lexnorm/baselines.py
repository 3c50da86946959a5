"""Replacement statistics from training data; MFR and leave-as-is baselines."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from lexnorm.corpus import Corpus, compare_form
from lexnorm.errors import ParseError
from lexnorm.metrics import RunOutput


@dataclass(frozen=True)
class ReplacementTable:
    """Per-raw-word candidate counts observed in training data.

    Keys are comparison-normalized (lowercased iff caseless); candidates
    keep their original casing so caseful datasets can restore capitals.
    """

    entries: Mapping[str, Mapping[str, int]]
    total_tokens: int
    caseless: bool = False


def build_table(train: Corpus) -> ReplacementTable:
    entries: dict[str, dict[str, int]] = {}
    total = 0
    for tok in train.tokens():
        key = compare_form(tok.raw, train.caseless)
        counts = entries.setdefault(key, {})
        counts[tok.norm] = counts.get(tok.norm, 0) + 1
        total += 1
    return ReplacementTable(entries=entries, total_tokens=total, caseless=train.caseless)


def majority_candidate(table: ReplacementTable, raw: str) -> str | None:
    """Most frequent candidate for a raw word, or None when unseen.

    Ties prefer the identity candidate, then the lexicographically
    smallest candidate by code point.
    """
    key = compare_form(raw, table.caseless)
    counts = table.entries.get(key)
    if not counts:
        return None
    best = max(counts.values())
    tied = [cand for cand, n in counts.items() if n == best]
    if len(tied) == 1:
        return tied[0]
    if raw in tied:
        return raw
    identity = sorted(
        c for c in tied if compare_form(c, table.caseless) == key
    )
    if identity:
        return identity[0]
    return min(tied)


def apply_mfr(table: ReplacementTable, test: Corpus) -> RunOutput:
    """Most-Frequent-Replacement baseline; unseen words pass through unchanged."""
    preds = []
    for tok in test.tokens():
        cand = majority_candidate(table, tok.raw)
        preds.append(cand if cand is not None else tok.raw)
    return RunOutput(tuple(preds))


def leave_as_is(test: Corpus) -> RunOutput:
    """The do-nothing baseline that anchors ERR at zero."""
    return RunOutput(tuple(tok.raw for tok in test.tokens()))


def save_table(table: ReplacementTable, path: str | Path) -> None:
    """TSV rows `raw<TAB>candidate<TAB>count`, sorted by raw, then count desc."""
    lines = []
    for raw in sorted(table.entries):
        counts = table.entries[raw]
        for cand, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"{raw}\t{cand}\t{n}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_table(path: str | Path, caseless: bool = False) -> ReplacementTable:
    entries: dict[str, dict[str, int]] = {}
    total = 0
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("expected raw<TAB>candidate<TAB>count", line=lineno)
        raw, cand, count_text = parts
        try:
            count = int(count_text)
        except ValueError:
            raise ParseError(f"bad count {count_text!r}", line=lineno) from None
        if count < 1:
            raise ParseError(f"count must be >= 1, got {count}", line=lineno)
        entries.setdefault(raw, {})[cand] = count
        total += count
    return ReplacementTable(entries=entries, total_tokens=total, caseless=caseless)
