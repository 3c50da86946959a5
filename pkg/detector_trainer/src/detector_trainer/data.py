"""Corpus and label file I/O.

The file contracts are shared with the normalization toolkit: corpora are
UTF-8 `raw<TAB>norm` lines with one blank line between sentences; label
files carry one `0`/`1` per token with the same blank-line framing.
"""

from __future__ import annotations

from pathlib import Path


class FormatError(ValueError):
    """Malformed corpus or label data; message carries a 1-based line number."""


Sentence = list[tuple[str, str]]  # (raw, norm) pairs


def read_corpus(path: str | Path) -> list[Sentence]:
    """Parse a word-aligned corpus file into sentences of (raw, norm) pairs."""
    text = Path(path).read_text(encoding="utf-8")
    sentences: list[Sentence] = []
    current: Sentence = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        if "\t" not in line:
            raise FormatError(f"line {lineno}: expected raw<TAB>norm, got {line!r}")
        raw, _, norm = line.partition("\t")
        if not raw or raw.strip() != raw or any(ch.isspace() for ch in raw):
            raise FormatError(f"line {lineno}: bad raw field {raw!r}")
        current.append((raw, norm))
    if current:
        sentences.append(current)
    if not sentences:
        raise FormatError("line 1: corpus has no tokens")
    return sentences


def derive_labels(sentences: list[Sentence]) -> list[list[int]]:
    """Gold detection labels: 1 where the norm differs from the raw word."""
    return [[0 if norm == raw else 1 for raw, norm in s] for s in sentences]


def write_labels(label_sentences: list[list[int]], path: str | Path) -> None:
    """One label per line, one blank line between sentences."""
    blocks = ("\n".join(str(v) for v in s) for s in label_sentences)
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
