"""Binary detection labels: which tokens should the normalizer touch.

Labels align one-to-one with corpus tokens. Three sources: gold (derived
from the annotation itself), table (a training replacement table flags
words whose majority candidate differs from the raw form), and external
(a label file produced by a separate detector). The exchange format is
one 0/1 per line with a blank line between sentences, mirroring the
corpus file framing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from lexnorm.baselines import ReplacementTable, majority_candidate
from lexnorm.corpus import Corpus, compare_form, needs_normalization
from lexnorm.errors import AlignmentError, ParseError


class LabelSource(Enum):
    GOLD = "gold"
    TABLE = "table"
    EXTERNAL = "external"


@dataclass(frozen=True)
class DetectionLabels:
    """One flag per token, sentence structure implied by the paired corpus."""

    labels: tuple[int, ...]
    source: LabelSource

    def __post_init__(self) -> None:
        for flag in self.labels:
            if flag not in (0, 1):
                raise ValueError(f"labels must be 0 or 1, got {flag!r}")


def gold_labels(corpus: Corpus) -> DetectionLabels:
    flags = tuple(
        1 if needs_normalization(tok, corpus.caseless) else 0
        for tok in corpus.tokens()
    )
    return DetectionLabels(labels=flags, source=LabelSource.GOLD)


def table_labels(table: ReplacementTable, corpus: Corpus) -> DetectionLabels:
    """Flag tokens whose training-majority candidate differs from the raw form.

    Words never seen in training stay unflagged, as do words whose majority
    vote is the identity.
    """
    flags = []
    for tok in corpus.tokens():
        cand = majority_candidate(table, tok.raw)
        if cand is None:
            flags.append(0)
        else:
            same = compare_form(cand, table.caseless) == compare_form(
                tok.raw, table.caseless
            )
            flags.append(0 if same else 1)
    return DetectionLabels(labels=tuple(flags), source=LabelSource.TABLE)


def load_external_labels(path: str | Path, corpus: Corpus) -> DetectionLabels:
    """Read a 0/1-per-line label file, validating its framing against `corpus`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    pos = 0
    flags: list[int] = []
    for i, sentence in enumerate(corpus.sentences):
        for _ in sentence.tokens:
            if pos >= len(lines):
                raise AlignmentError(
                    f"label file ended inside sentence {i + 1} of the corpus"
                )
            text = lines[pos].strip()
            if text not in ("0", "1"):
                raise ParseError(f"expected 0 or 1, got {lines[pos]!r}", line=pos + 1)
            flags.append(int(text))
            pos += 1
        if i < len(corpus.sentences) - 1:
            if pos >= len(lines) or lines[pos].strip():
                raise AlignmentError(
                    f"missing blank separator after sentence {i + 1} in label file"
                )
            pos += 1
    while pos < len(lines):
        if lines[pos].strip():
            raise AlignmentError("label file has content past the end of the corpus")
        pos += 1
    return DetectionLabels(labels=tuple(flags), source=LabelSource.EXTERNAL)


def save_labels(labels: DetectionLabels, corpus: Corpus, path: str | Path) -> None:
    if len(labels.labels) != corpus.n_tokens:
        raise AlignmentError(
            f"labels cover {len(labels.labels)} tokens, corpus has {corpus.n_tokens}"
        )
    blocks = []
    pos = 0
    for sentence in corpus.sentences:
        n = len(sentence.tokens)
        blocks.append("\n".join(str(f) for f in labels.labels[pos : pos + n]))
        pos += n
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
