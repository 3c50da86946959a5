"""Error taxonomy, segmentation ratios, and annotation sheets."""

import random
from collections import Counter

import pytest

from lexnorm.analysis import (
    SHEET_HEADER,
    ErrorCategory,
    categorize_errors,
    export_annotation_sheet,
    load_vocab,
    seg_stats_bytes,
    seg_stats_vocab,
    segment_greedy,
    summarize_annotation_sheet,
)
from lexnorm.baselines import build_table
from lexnorm.corpus import parse_corpus
from lexnorm.detection import gold_labels
from lexnorm.errors import AlignmentError, SamplingError, SegmentationError
from lexnorm.lookup import build_gated_lookup
from lexnorm.metrics import RunOutput
from lexnorm.pipeline import (
    BackendKind,
    LlmBackendConfig,
    PipelineConfig,
    PromptSpec,
    run_pipeline,
)
from tests.conftest import gen_corpus_text, gen_predictions

C = ErrorCategory.CORRECT
W = ErrorCategory.WRONG_CANDIDATE
O = ErrorCategory.OVERNORMALIZED
U = ErrorCategory.UNDERNORMALIZED


def test_categorize_mixed(corpus_e):
    cats, hist = categorize_errors(corpus_e, RunOutput(("yu", "i'm", "okk")))
    assert cats == [W, C, O]
    assert hist == Counter({W: 1, C: 1, O: 1})


def test_categorize_gold_is_all_correct(corpus_e):
    run = RunOutput(tuple(t.norm for t in corpus_e.tokens()))
    cats, hist = categorize_errors(corpus_e, run)
    assert cats == [C, C, C]
    assert hist == Counter({C: 3})


def test_categorize_leave_as_is(corpus_e):
    cats, _ = categorize_errors(corpus_e, RunOutput(("u", "im", "ok")))
    assert cats == [U, U, C]


def test_categorize_alignment_error(corpus_e):
    with pytest.raises(AlignmentError):
        categorize_errors(corpus_e, RunOutput(("a",)))


def test_categorize_caseless():
    c = parse_corpus("OK\tok\n\n", "en", caseless=True)
    cats, _ = categorize_errors(c, RunOutput(("Ok",)))
    assert cats == [C]


def test_histogram_sums_to_token_count():
    rng = random.Random(67)
    for _ in range(50):
        c = parse_corpus(gen_corpus_text(rng), "und")
        preds = gen_predictions(rng, c)
        _, hist = categorize_errors(c, RunOutput(tuple(preds)))
        assert sum(hist.values()) == c.n_tokens


def test_gold_detection_pipeline_never_overnormalizes(corpus_e, corpus_e_train):
    cfg = PipelineConfig(
        detection=gold_labels(corpus_e),
        prompt=PromptSpec(k_shots=2, seed=0),
        backend=LlmBackendConfig(kind=BackendKind.ECHO),
        lookup=build_gated_lookup(build_table(corpus_e_train)),
    )
    run, _ = run_pipeline(cfg, corpus_e, corpus_e_train)
    _, hist = categorize_errors(corpus_e, run)
    assert hist.get(O, 0) == 0


def test_seg_stats_bytes_ascii(corpus_e):
    stats = seg_stats_bytes(corpus_e)
    assert stats.chars_per_subword == 1.0
    assert stats.tokenizer_id == "bytes"
    # 5 ASCII characters (u, im, ok) over 3 words
    assert stats.subwords_per_word == pytest.approx(5 / 3)


def test_seg_stats_bytes_thai():
    c = parse_corpus("กา\tกา\n\n", "th")
    stats = seg_stats_bytes(c)
    assert stats.chars_per_subword == pytest.approx(1 / 3)
    assert stats.subwords_per_word == 6.0


def test_seg_stats_bytes_mixed_matches_hand_count():
    c = parse_corpus("héllo\thello\nกา\tกา\n\n", "und")
    stats = seg_stats_bytes(c)
    chars = 5 + 2
    bytes_ = len("héllo".encode()) + len("กา".encode())  # 6 + 6
    assert stats.chars_per_subword == pytest.approx(chars / bytes_)
    assert stats.subwords_per_word == pytest.approx(bytes_ / 2)


def test_seg_stats_bytes_ratio_never_exceeds_one():
    rng = random.Random(71)
    for _ in range(50):
        c = parse_corpus(gen_corpus_text(rng, unicode_words=True), "und")
        stats = seg_stats_bytes(c)
        assert stats.chars_per_subword <= 1.0
        pure_ascii = all(ord(ch) < 128 for t in c.tokens() for ch in t.raw)
        assert (stats.chars_per_subword == 1.0) == pure_ascii


def test_latin_ratio_strictly_above_non_latin(corpus_e):
    thai = parse_corpus("กา\tกา\nไม่\tไม่\n\n", "th")
    assert (
        seg_stats_bytes(corpus_e).chars_per_subword
        > seg_stats_bytes(thai).chars_per_subword
    )


def test_segment_greedy_toy_vocab():
    assert segment_greedy("going", ["go", "ing", "n", "a"]) == ["go", "ing"]


def test_segment_greedy_full_word():
    assert segment_greedy("going", ["going", "go", "ing"]) == ["going"]


def test_segment_greedy_unsegmentable():
    with pytest.raises(SegmentationError, match="U\\+0E01"):
        segment_greedy("ก", ["a", "b"])


def test_segment_greedy_byte_fallback():
    pieces = segment_greedy("ก", ["a"], byte_fallback=True)
    assert pieces == ["<0xE0>", "<0xB8>", "<0x81>"]


def test_segment_greedy_empty_vocab():
    with pytest.raises(ValueError):
        segment_greedy("x", [])


def test_seg_stats_vocab_single_chars(corpus_e):
    vocab = sorted({ch for t in corpus_e.tokens() for ch in t.raw})
    stats = seg_stats_vocab(corpus_e, vocab, tokenizer_id="chars")
    assert stats.subwords_per_word == pytest.approx(5 / 3)  # mean word length
    assert stats.chars_per_subword == 1.0
    assert stats.tokenizer_id == "chars"


def test_seg_stats_vocab_toy():
    c = parse_corpus("going\tgoing to\n\n", "en")
    stats = seg_stats_vocab(c, ["go", "ing", "n", "a"])
    assert stats.subwords_per_word == 2.0
    assert stats.chars_per_subword == pytest.approx(5 / 2)


def test_load_vocab(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("go\ning\nn\na\n\n", encoding="utf-8")
    assert load_vocab(path) == ["go", "ing", "n", "a"]


def flagged_sheet(corpus, run=None, sample=2, seed=0):
    run = run or RunOutput(tuple(t.raw for t in corpus.tokens()))
    return export_annotation_sheet(corpus, run, gold_labels(corpus), sample, seed)


def test_sheet_header_and_rows(corpus_e):
    text = flagged_sheet(corpus_e, RunOutput(("you", "im", "ok")), sample=2)
    lines = text.splitlines()
    assert lines[0] == "\t".join(SHEET_HEADER)
    assert len(lines) == 3
    assert lines[1].split("\t")[:4] == ["[[u]] im ok", "u", "you", "you"]
    assert lines[2].split("\t")[:4] == ["u [[im]] ok", "im", "im", "i'm"]
    for row in lines[1:]:
        assert row.endswith("\t")  # blank sub-category column


def test_sheet_zero_sample_is_header_only(corpus_e):
    text = flagged_sheet(corpus_e, sample=0)
    assert text == "\t".join(SHEET_HEADER) + "\n"


def test_sheet_oversample_rejected(corpus_e):
    with pytest.raises(SamplingError):
        flagged_sheet(corpus_e, sample=3)  # only 2 tokens flagged


def test_sheet_deterministic(corpus_t):
    assert flagged_sheet(corpus_t, sample=3, seed=9) == flagged_sheet(
        corpus_t, sample=3, seed=9
    )


def test_sheet_rows_are_flagged_tokens_only():
    rng = random.Random(73)
    c = parse_corpus(gen_corpus_text(rng, max_tokens=8), "und")
    labels = gold_labels(c)
    flagged_raws = {
        t.raw for t, flag in zip(c.tokens(), labels.labels) if flag
    }
    n = sum(labels.labels)
    if n == 0:
        return
    text = export_annotation_sheet(
        c, RunOutput(tuple(t.raw for t in c.tokens())), labels, n, 0
    )
    for line in text.splitlines()[1:]:
        assert line.split("\t")[1] in flagged_raws


def test_sheet_178_rows():
    text = "\n\n".join("u\tyou" for _ in range(200)) + "\n"
    c = parse_corpus(text, "en")
    sheet = flagged_sheet(c, sample=178, seed=4)
    assert len(sheet.splitlines()) == 179
    assert sheet == flagged_sheet(c, sample=178, seed=4)


def test_summarize_sheet(corpus_e):
    base = flagged_sheet(corpus_e, RunOutput(("you", "im", "ok")), sample=2)
    lines = base.splitlines()
    filled = "\n".join([lines[0], lines[1] + "phonetic", lines[2] + "contraction"])
    summary = summarize_annotation_sheet(filled)
    assert summary.n_rows == 2
    assert summary.n_labeled == 2
    assert summary.counts == {"phonetic": 1, "contraction": 1}
    assert summary.proportions["phonetic"] == 0.5


def test_summarize_sheet_ignores_blank_labels(corpus_e):
    base = flagged_sheet(corpus_e, sample=2)
    summary = summarize_annotation_sheet(base)
    assert summary.n_rows == 2
    assert summary.n_labeled == 0
    assert summary.counts == {}


def test_summarize_rejects_wrong_header():
    with pytest.raises(ValueError, match="header"):
        summarize_annotation_sheet("a\tb\tc\n")
