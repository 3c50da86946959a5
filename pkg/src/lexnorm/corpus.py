"""Word-aligned lexical-normalization corpora: parsing, validation, serialization.

File format: UTF-8, LF line endings, one ``raw<TAB>norm`` pair per line,
one blank line between sentences. A norm with internal spaces is a 1-n
split; an empty norm continues an n-1 merge whose full normalization is
carried by the preceding head token.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator

from lexnorm.errors import EncodingError, ParseError


class TokenKind(Enum):
    """How a token participates in the raw-to-normalized alignment."""

    PLAIN = "plain"
    SPLIT_HEAD = "split_head"
    MERGE_HEAD = "merge_head"
    MERGE_CONT = "merge_cont"


@dataclass(frozen=True)
class Token:
    raw: str
    norm: str
    kind: TokenKind


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")
        _check_kinds(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    language_tag: str
    caseless: bool = False

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("corpus must contain at least one sentence")
        if not self.language_tag:
            raise ValueError("language_tag must be non-empty")

    def tokens(self) -> Iterator[Token]:
        for sentence in self.sentences:
            yield from sentence.tokens

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class CorpusStats:
    n_words: int
    n_normalized: int
    pct_norm: float
    has_split: bool
    has_merge: bool


def compare_form(text: str, caseless: bool) -> str:
    """Comparison form of a raw/norm/prediction string: lowercased iff caseless."""
    return text.lower() if caseless else text


def needs_normalization(token: Token, caseless: bool) -> bool:
    """True when the gold norm differs from the raw word in comparison form.

    Merge continuations (empty norm) and splits always differ from raw.
    """
    return compare_form(token.norm, caseless) != compare_form(token.raw, caseless)


def _check_kinds(tokens: tuple[Token, ...]) -> None:
    # Enforces the kind <-> structure equivalences for programmatic construction;
    # the parser produces conforming tokens by inference.
    for i, tok in enumerate(tokens):
        if not tok.raw:
            raise ValueError(f"token {i}: raw must be non-empty")
        if any(ch.isspace() for ch in tok.raw):
            raise ValueError(f"token {i}: raw {tok.raw!r} contains whitespace")
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        merges_next = nxt is not None and nxt.norm == ""
        if tok.norm == "":
            if i == 0:
                raise ValueError("merge continuation cannot start a sentence")
            if tok.kind is not TokenKind.MERGE_CONT:
                raise ValueError(f"token {i}: empty norm requires MERGE_CONT kind")
            continue
        if tok.norm != " ".join(tok.norm.split()):
            raise ValueError(f"token {i}: norm {tok.norm!r} is not space-canonical")
        if merges_next:
            # n-m alignments put a multi-word norm on the merge head; the
            # head is still a MergeHead, never a SplitHead
            expected = TokenKind.MERGE_HEAD
        elif " " in tok.norm:
            expected = TokenKind.SPLIT_HEAD
        else:
            expected = TokenKind.PLAIN
        if tok.kind is not expected:
            raise ValueError(
                f"token {i}: kind {tok.kind.value} but structure implies {expected.value}"
            )


def _build_sentence(rows: list[tuple[str, str, int]]) -> Sentence:
    toks = []
    for i, (raw, norm, lineno) in enumerate(rows):
        next_norm = rows[i + 1][1] if i + 1 < len(rows) else None
        if norm == "":
            kind = TokenKind.MERGE_CONT
        elif next_norm == "":
            kind = TokenKind.MERGE_HEAD
        elif " " in norm:
            kind = TokenKind.SPLIT_HEAD
        else:
            kind = TokenKind.PLAIN
        toks.append(Token(raw, norm, kind))
    return Sentence(tuple(toks))


def parse_corpus(data: bytes | str, language_tag: str, caseless: bool = False) -> Corpus:
    """Parse corpus bytes (or text) into a validated Corpus.

    Raises ParseError with a 1-based line number on malformed lines,
    EncodingError on non-UTF-8 bytes.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"corpus is not valid UTF-8: {exc}") from None
    else:
        text = data
    lines = text.split("\n")
    end = len(lines)
    # trailing blank lines are tolerated; internal doubled blanks are not
    while end and lines[end - 1] == "":
        end -= 1
    rows: list[tuple[str, str, int]] = []
    sentences: list[Sentence] = []
    for lineno, line in enumerate(lines[:end], start=1):
        if line == "":
            if not rows:
                raise ParseError("consecutive blank lines (empty sentence)", line=lineno)
            sentences.append(_build_sentence(rows))
            rows = []
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(
                f"expected raw<TAB>norm, found {len(parts) - 1} tabs", line=lineno
            )
        raw, norm = parts
        if raw == "":
            raise ParseError("empty raw token", line=lineno)
        if any(ch.isspace() for ch in raw):
            raise ParseError(f"raw token {raw!r} contains whitespace", line=lineno)
        if norm and norm != norm.strip():
            raise ParseError("norm has leading or trailing whitespace", line=lineno)
        norm = " ".join(norm.split())
        if norm == "" and not rows:
            raise ParseError("merge continuation at sentence start", line=lineno)
        rows.append((raw, norm, lineno))
    if rows:
        sentences.append(_build_sentence(rows))
    if not sentences:
        raise ParseError("corpus contains no sentences")
    return Corpus(tuple(sentences), language_tag=language_tag, caseless=caseless)


def serialize_corpus(corpus: Corpus) -> bytes:
    """Inverse of parse_corpus up to one trailing newline."""
    blocks = (
        "\n".join(f"{t.raw}\t{t.norm}" for t in s.tokens) for s in corpus.sentences
    )
    return ("\n\n".join(blocks) + "\n").encode("utf-8")


def load_corpus(path: str | Path, language_tag: str, caseless: bool = False) -> Corpus:
    return parse_corpus(Path(path).read_bytes(), language_tag, caseless)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_bytes(serialize_corpus(corpus))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    n_words = 0
    n_normalized = 0
    has_split = False
    has_merge = False
    for tok in corpus.tokens():
        n_words += 1
        if needs_normalization(tok, corpus.caseless):
            n_normalized += 1
        if tok.kind is TokenKind.SPLIT_HEAD:
            has_split = True
        elif tok.kind is not TokenKind.PLAIN:
            has_merge = True
    return CorpusStats(
        n_words=n_words,
        n_normalized=n_normalized,
        pct_norm=100.0 * n_normalized / n_words,
        has_split=has_split,
        has_merge=has_merge,
    )
