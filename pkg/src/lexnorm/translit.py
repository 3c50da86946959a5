"""Canonical decomposition and reversible Latin transliteration.

Text is decomposed to NFD, then each scalar is either mapped through a
table to a short Latin string or passed through when it is already in
the Latin output alphabet. Tables are data files shipped per script.
The encoding is designed to be invertible: from_latin(to_latin(x))
equals NFC(x) for any x the table covers.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping

from lexnorm.corpus import Corpus, Sentence, Token
from lexnorm.errors import CoverageError, ParseError, TranslitDecodeError

# the Latin output alphabet; separators live outside it
_ALLOWED = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789'")


@dataclass(frozen=True)
class MappingTable:
    """Scalar → Latin-string mapping plus the separator placed between units.

    With an empty separator every output must be a single character;
    otherwise outputs may be longer and the separator keeps unit
    boundaries recoverable. Single-character outputs shadow ("reserve")
    that Latin character: it can no longer pass through unmapped.
    """

    forward: Mapping[str, str]
    separator: str = ""

    def __post_init__(self) -> None:
        if not self.forward:
            raise ValueError("mapping table is empty")
        seen: set[str] = set()
        for key, out in self.forward.items():
            if len(key) != 1:
                raise ValueError(f"mapping key must be one scalar, got {key!r}")
            if not out:
                raise ValueError(f"empty output for U+{ord(key):04X}")
            bad = set(out) - _ALLOWED
            if bad:
                raise ValueError(
                    f"output {out!r} for U+{ord(key):04X} uses characters "
                    f"outside the Latin output alphabet: {sorted(bad)}"
                )
            if out in seen:
                raise ValueError(f"output {out!r} is not unique; table must be injective")
            seen.add(out)
            if not self.separator and len(out) != 1:
                raise ValueError(
                    "a table without separator needs single-character outputs; "
                    f"got {out!r}"
                )
        for ch in self.separator:
            if ch in _ALLOWED or ch.isspace():
                raise ValueError(
                    f"separator {self.separator!r} collides with the output alphabet"
                )

    @cached_property
    def reverse(self) -> dict[str, str]:
        return {out: key for key, out in self.forward.items()}

    @cached_property
    def reserved(self) -> frozenset[str]:
        # single-char outputs shadow the corresponding passthrough character
        return frozenset(out for out in self.forward.values() if len(out) == 1)


def decompose(text: str) -> list[str]:
    """NFD decomposition, one unit per Unicode scalar value."""
    return list(unicodedata.normalize("NFD", text))


def to_latin(text: str, m: MappingTable) -> str:
    """Deterministic Latin encoding; whitespace passes through as boundaries."""
    parts: list[str] = []
    span: list[str] = []
    uncovered: set[str] = set()

    def flush() -> None:
        if span:
            parts.append(m.separator.join(span))
            span.clear()

    for unit in decompose(text):
        if unit.isspace():
            flush()
            parts.append(unit)
            continue
        mapped = m.forward.get(unit)
        if mapped is not None:
            span.append(mapped)
        elif unit in _ALLOWED and unit not in m.reserved:
            span.append(unit)
        else:
            uncovered.add(unit)
    if uncovered:
        points = ", ".join(f"U+{ord(c):04X}" for c in sorted(uncovered))
        raise CoverageError(f"table does not cover code points: {points}")
    flush()
    return "".join(parts)


def from_latin(latin: str, m: MappingTable) -> str:
    """Invert to_latin; raises on any segment the table cannot explain."""
    result: list[str] = []
    for piece in re.split(r"(\s+)", latin):
        if not piece:
            continue
        if piece.isspace():
            result.append(piece)
            continue
        chunks = piece.split(m.separator) if m.separator else list(piece)
        for chunk in chunks:
            original = m.reverse.get(chunk)
            if original is not None:
                result.append(original)
            elif len(chunk) == 1 and chunk in _ALLOWED:
                result.append(chunk)
            else:
                raise TranslitDecodeError(f"cannot decode segment {chunk!r}")
    return unicodedata.normalize("NFC", "".join(result))


def transform_corpus(c: Corpus, m: MappingTable) -> Corpus:
    """Rewrite every raw and norm into Latin space; alignment kinds survive."""
    sentences = []
    for sentence in c.sentences:
        tokens = tuple(
            Token(raw=to_latin(t.raw, m), norm=to_latin(t.norm, m), kind=t.kind)
            for t in sentence.tokens
        )
        sentences.append(Sentence(tokens=tokens))
    return Corpus(
        sentences=tuple(sentences),
        language_tag=c.language_tag,
        caseless=c.caseless,
    )


def invert_corpus(c: Corpus, m: MappingTable) -> Corpus:
    """Undo transform_corpus: decode every raw and norm back to NFC text."""
    sentences = []
    for sentence in c.sentences:
        tokens = tuple(
            Token(raw=from_latin(t.raw, m), norm=from_latin(t.norm, m), kind=t.kind)
            for t in sentence.tokens
        )
        sentences.append(Sentence(tokens=tokens))
    return Corpus(
        sentences=tuple(sentences),
        language_tag=c.language_tag,
        caseless=c.caseless,
    )


def save_mapping(m: MappingTable, path: str | Path) -> None:
    lines = [f"#separator={m.separator}"]
    for key in sorted(m.forward, key=ord):
        lines.append(f"U+{ord(key):04X}\t{m.forward[key]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mapping(path: str | Path) -> MappingTable:
    """TSV `U+XXXX<TAB>latin_string`; the header line declares the separator."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    separator: str | None = None
    forward: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("#separator="):
                separator = line[len("#separator=") :]
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected U+XXXX<TAB>latin_string", line=lineno)
        point, out = parts
        if not point.startswith("U+"):
            raise ParseError(f"bad code point {point!r}", line=lineno)
        try:
            key = chr(int(point[2:], 16))
        except (ValueError, OverflowError):
            raise ParseError(f"bad code point {point!r}", line=lineno) from None
        if key in forward:
            raise ParseError(f"duplicate code point {point}", line=lineno)
        forward[key] = out
    if separator is None:
        raise ParseError("missing #separator= header")
    if not forward:
        raise ParseError("mapping file has no entries")
    try:
        return MappingTable(forward=forward, separator=separator)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
