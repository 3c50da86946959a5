"""Entropy-gated dictionary stage: resolve low-ambiguity words before the LLM.

A word's candidate distribution is summarized by its Miller-Madow entropy
(maximum-likelihood entropy plus the (m-1)/(2N) small-sample correction,
reported in bits). Words whose entropy is at or below the threshold and
whose support meets the minimum are resolved deterministically to their
majority candidate; everything else observed in training is deferred to
the LLM stage. Identity-majority words resolve to themselves so confident
non-errors never reach the LLM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from lexnorm.baselines import ReplacementTable, majority_candidate
from lexnorm.corpus import Corpus, compare_form
from lexnorm.detection import DetectionLabels
from lexnorm.errors import AlignmentError, ParseError

DEFAULT_THRESHOLD_BITS = 0.3
DEFAULT_MIN_SUPPORT = 2

_DEFERRED_SENTINEL = "*"


def miller_madow_entropy(counts: Mapping[str, int]) -> float:
    """Bias-corrected entropy of a candidate count distribution, in bits.

    H_MM = H_MLE + (m - 1) / (2 * N * ln 2), where m is the number of
    candidates with nonzero count and N the total count.
    """
    values = []
    for cand, n in counts.items():
        if n < 0:
            raise ValueError(f"negative count for candidate {cand!r}")
        if n:
            values.append(n)
    if not values:
        raise ValueError("entropy of an empty count distribution is undefined")
    total = sum(values)
    h_mle = -sum((n / total) * math.log2(n / total) for n in values)
    correction = (len(values) - 1) / (2.0 * total * math.log(2.0))
    return h_mle + correction


@dataclass(frozen=True)
class GatedLookup:
    """Replacement table filtered by the entropy gate."""

    resolved: Mapping[str, str]
    deferred: frozenset[str]
    threshold_bits: float
    min_support: int
    # per observed word: (entropy_bits, support); kept for persistence/reports
    word_stats: Mapping[str, tuple[float, int]]
    caseless: bool = False


def build_gated_lookup(
    table: ReplacementTable,
    threshold_bits: float = DEFAULT_THRESHOLD_BITS,
    min_support: int = DEFAULT_MIN_SUPPORT,
) -> GatedLookup:
    if threshold_bits < 0:
        raise ValueError("threshold_bits must be >= 0")
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    resolved: dict[str, str] = {}
    deferred: set[str] = set()
    word_stats: dict[str, tuple[float, int]] = {}
    for raw, counts in table.entries.items():
        support = sum(counts.values())
        entropy = miller_madow_entropy(counts)
        word_stats[raw] = (entropy, support)
        if entropy <= threshold_bits and support >= min_support:
            cand = majority_candidate(table, raw)
            assert cand is not None
            resolved[raw] = cand
        else:
            deferred.add(raw)
    return GatedLookup(
        resolved=resolved,
        deferred=frozenset(deferred),
        threshold_bits=threshold_bits,
        min_support=min_support,
        word_stats=word_stats,
        caseless=table.caseless,
    )


def apply_lookup(
    gl: GatedLookup, test: Corpus, labels: DetectionLabels
) -> list[Optional[str]]:
    """Partial run output: None marks flagged tokens left for the LLM stage.

    Unflagged tokens pass through as their raw form; flagged tokens are
    replaced when the gate resolved their word, deferred otherwise.
    """
    if test.n_tokens != len(labels.labels):
        raise AlignmentError(
            f"labels cover {len(labels.labels)} tokens, corpus has {test.n_tokens}"
        )
    out: list[Optional[str]] = []
    for tok, flag in zip(test.tokens(), labels.labels):
        if not flag:
            out.append(tok.raw)
            continue
        key = compare_form(tok.raw, gl.caseless)
        out.append(gl.resolved.get(key))
    return out


def save_gated_lookup(gl: GatedLookup, path: str | Path) -> None:
    """TSV `raw<TAB>replacement<TAB>entropy_bits<TAB>support`; deferred rows use `*`."""
    lines = [f"#threshold_bits={gl.threshold_bits}\tmin_support={gl.min_support}"]
    for raw in sorted(gl.word_stats):
        entropy, support = gl.word_stats[raw]
        replacement = gl.resolved.get(raw, _DEFERRED_SENTINEL)
        lines.append(f"{raw}\t{replacement}\t{entropy:.6f}\t{support}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_gated_lookup(path: str | Path, caseless: bool = False) -> GatedLookup:
    resolved: dict[str, str] = {}
    deferred: set[str] = set()
    word_stats: dict[str, tuple[float, int]] = {}
    threshold_bits = math.nan
    min_support = 1
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split("\t"):
                key, _, value = part.partition("=")
                if key == "threshold_bits":
                    threshold_bits = float(value)
                elif key == "min_support":
                    min_support = int(value)
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(
                "expected raw<TAB>replacement<TAB>entropy_bits<TAB>support", line=lineno
            )
        raw, replacement, entropy_text, support_text = parts
        try:
            entropy = float(entropy_text)
            support = int(support_text)
        except ValueError:
            raise ParseError("bad entropy or support field", line=lineno) from None
        word_stats[raw] = (entropy, support)
        if replacement == _DEFERRED_SENTINEL:
            deferred.add(raw)
        else:
            resolved[raw] = replacement
    return GatedLookup(
        resolved=resolved,
        deferred=frozenset(deferred),
        threshold_bits=threshold_bits,
        min_support=min_support,
        word_stats=word_stats,
        caseless=caseless,
    )
