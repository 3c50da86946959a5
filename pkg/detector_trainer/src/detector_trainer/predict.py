"""Batched prediction: corpus file in, label file out."""

from __future__ import annotations

from pathlib import Path

from .data import read_corpus, write_labels
from .train import load_model, predict_sentences


def predict_file(
    model_dir: str | Path, corpus_path: str | Path, out_path: str | Path
) -> int:
    """Label a corpus file; returns the number of labeled tokens."""
    sentences = read_corpus(corpus_path)
    model = load_model(model_dir)
    label_sents = predict_sentences(model, sentences)
    write_labels(label_sents, out_path)
    return sum(len(s) for s in label_sents)
