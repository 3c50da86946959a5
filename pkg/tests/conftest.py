"""Shared fixtures: tiny hand-built corpora and random-corpus generators."""

from __future__ import annotations

import random

import pytest

from lexnorm.corpus import Corpus, parse_corpus

E_TEXT = "u\tyou\nim\ti'm\nok\tok\n"

T_TEXT = (
    "u\tyou\nr\tare\nok\tok\n"
    "\n"
    "im\ti'm\ngonna\tgoing to\nhome\thome\n"
    "\n"
    "im\tim\nso\tso\nhappy\thappy\n"
)

# training corpus whose default gate resolves "u" (3x unanimous) and
# defers "im" (split evidence)
E_TRAIN_TEXT = (
    "u\tyou\nr\tare\nok\tok\n"
    "\n"
    "u\tyou\nim\ti'm\ngood\tgood\n"
    "\n"
    "u\tyou\nim\tim\nlol\tlol\n"
)

_ASCII_WORDS = [
    "a", "b", "cat", "dog", "u", "you", "im", "ok", "OK", "Ok", "gonna",
    "home", "so", "xx", "yy", "zz", "lol", "wrd",
]

_UNI_WORDS = _ASCII_WORDS + ["é", "ña", "crème", "ก", "กา", "ไม่", "híc"]


def gen_corpus_text(
    rng: random.Random, max_tokens: int = 8, unicode_words: bool = False
) -> str:
    """Random well-formed corpus text with splits, merges, and n-m heads."""
    words = _UNI_WORDS if unicode_words else _ASCII_WORDS

    def w() -> str:
        return rng.choice(words)

    total = rng.randint(1, max_tokens)
    sizes = []
    left = total
    while left:
        n = rng.randint(1, left)
        sizes.append(n)
        left -= n
    blocks = []
    for n in sizes:
        rows = []
        i = 0
        while i < n:
            raw = w()
            roll = rng.random()
            if roll < 0.15 and i + 1 < n:
                head_norm = w() if rng.random() < 0.7 else f"{w()} {w()}"
                rows.append(f"{raw}\t{head_norm}")
                rows.append(f"{w()}\t")
                i += 2
                continue
            if roll < 0.30:
                rows.append(f"{raw}\t{w()} {w()}")
            elif roll < 0.55:
                rows.append(f"{raw}\t{w()}")
            else:
                rows.append(f"{raw}\t{raw}")
            i += 1
        blocks.append("\n".join(rows))
    return "\n\n".join(blocks) + "\n"


def gen_predictions(rng: random.Random, corpus: Corpus) -> list[str]:
    preds = []
    for tok in corpus.tokens():
        roll = rng.random()
        if roll < 0.35:
            preds.append(tok.norm)
        elif roll < 0.65:
            preds.append(tok.raw)
        elif roll < 0.80:
            preds.append(rng.choice(_ASCII_WORDS))
        elif roll < 0.90:
            preds.append("")
        else:
            preds.append(tok.raw.upper())
    return preds


def naive_score(pairs: list[tuple[str, str]], preds: list[str], caseless: bool) -> dict:
    """Deliberately plain reference scorer, written from the definitions."""

    def cf(s: str) -> str:
        return s.lower() if caseless else s

    total = len(pairs)
    correct = sum(1 for (_, g), p in zip(pairs, preds) if cf(p) == cf(g))
    lai_correct = sum(1 for r, g in pairs if cf(r) == cf(g))
    acc = correct / total
    lai = lai_correct / total
    err = None if lai >= 1.0 else 100.0 * (acc - lai) / (1.0 - lai)
    tp = sum(1 for (r, g), p in zip(pairs, preds) if cf(g) != cf(r) and cf(p) == cf(g))
    fn = sum(1 for (r, g), p in zip(pairs, preds) if cf(g) != cf(r) and cf(p) == cf(r))
    fp = sum(1 for (r, g), p in zip(pairs, preds) if cf(p) != cf(r) and cf(p) != cf(g))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": acc,
        "lai": lai,
        "err": err,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "correct": correct,
        "total": total,
    }


@pytest.fixture
def corpus_e() -> Corpus:
    return parse_corpus(E_TEXT, "en")


@pytest.fixture
def corpus_t() -> Corpus:
    return parse_corpus(T_TEXT, "en")


@pytest.fixture
def corpus_e_train() -> Corpus:
    return parse_corpus(E_TRAIN_TEXT, "en")


@pytest.fixture
def corpus_gen():
    return gen_corpus_text


@pytest.fixture
def prediction_gen():
    return gen_predictions


@pytest.fixture
def naive_scorer():
    return naive_score
