"""Detection labels: gold, table heuristic, and external label files."""

import random

import pytest

from lexnorm.baselines import build_table
from lexnorm.corpus import parse_corpus
from lexnorm.detection import (
    DetectionLabels,
    LabelSource,
    gold_labels,
    load_external_labels,
    save_labels,
    table_labels,
)
from lexnorm.errors import AlignmentError, ParseError
from lexnorm.metrics import detection_f1
from tests.conftest import gen_corpus_text


def test_gold_labels_fixture(corpus_e):
    labels = gold_labels(corpus_e)
    assert labels.labels == (1, 1, 0)
    assert labels.source is LabelSource.GOLD


def test_gold_labels_all_identity():
    c = parse_corpus("a\ta\nb\tb\n\n", "en")
    assert gold_labels(c).labels == (0, 0)


def test_gold_labels_split_is_positive():
    c = parse_corpus("gonna\tgoing to\n\n", "en")
    assert gold_labels(c).labels == (1,)


def test_gold_labels_merge_cont_is_positive():
    c = parse_corpus("some\tsomething\nthing\t\n\n", "en")
    assert gold_labels(c).labels == (1, 1)


def test_gold_labels_caseless():
    c = parse_corpus("OK\tok\n\n", "en", caseless=True)
    assert gold_labels(c).labels == (0,)


def test_table_labels_fixture(corpus_t, corpus_e):
    table = build_table(corpus_t)
    labels = table_labels(table, corpus_e)
    # u -> you fires; im ties to identity; ok is identity
    assert labels.labels == (1, 0, 0)
    assert labels.source is LabelSource.TABLE


def test_table_labels_unseen_never_fires(corpus_t):
    table = build_table(corpus_t)
    test = parse_corpus("zzz\tzzz\nqqq\tqqq\n\n", "en")
    assert table_labels(table, test).labels == (0, 0)


def test_load_external_labels(tmp_path, corpus_e):
    path = tmp_path / "labels.txt"
    path.write_text("1\n1\n0\n\n", encoding="utf-8")
    labels = load_external_labels(path, corpus_e)
    assert labels.labels == (1, 1, 0)
    assert labels.source is LabelSource.EXTERNAL


def test_load_external_labels_too_short(tmp_path, corpus_e):
    path = tmp_path / "labels.txt"
    path.write_text("1\n1\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        load_external_labels(path, corpus_e)


def test_load_external_labels_bad_value(tmp_path, corpus_e):
    path = tmp_path / "labels.txt"
    path.write_text("1\n2\n0\n\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        load_external_labels(path, corpus_e)


def test_load_external_labels_missing_blank_separator(tmp_path, corpus_t):
    path = tmp_path / "labels.txt"
    path.write_text("\n".join("0" for _ in range(9)) + "\n", encoding="utf-8")
    with pytest.raises(AlignmentError, match="sentence 1"):
        load_external_labels(path, corpus_t)


def test_load_external_labels_trailing_content(tmp_path, corpus_e):
    path = tmp_path / "labels.txt"
    path.write_text("1\n1\n0\n\n1\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        load_external_labels(path, corpus_e)


def test_save_load_labels_round_trip(tmp_path):
    rng = random.Random(59)
    for i in range(25):
        c = parse_corpus(gen_corpus_text(rng), "und")
        labels = gold_labels(c)
        path = tmp_path / f"labels{i}.txt"
        save_labels(labels, c, path)
        again = load_external_labels(path, c)
        assert again.labels == labels.labels


def test_saved_label_file_framing(tmp_path, corpus_t):
    path = tmp_path / "labels.txt"
    save_labels(gold_labels(corpus_t), corpus_t, path)
    assert path.read_text(encoding="utf-8") == "1\n1\n0\n\n1\n1\n0\n\n0\n0\n0\n"


def test_detection_labels_validation():
    with pytest.raises(ValueError):
        DetectionLabels(labels=(0, 2), source=LabelSource.EXTERNAL)


def test_gold_vs_gold_f1_is_one():
    rng = random.Random(61)
    checked = 0
    while checked < 25:
        c = parse_corpus(gen_corpus_text(rng), "und")
        labels = gold_labels(c).labels
        if not any(labels):
            continue
        assert detection_f1(labels, labels) == 1.0
        checked += 1
