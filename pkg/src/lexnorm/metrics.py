"""Word-level scoring: accuracy, Error Reduction Rate, precision/recall/F1.

All metrics share one convention set:

* predictions align 1:1 with corpus tokens (merge continuations predict
  the empty string);
* comparison is case-insensitive iff the corpus carries the caseless flag;
* a needs-normalization token predicted as something other than its raw
  or gold form counts as a false positive, not a false negative, so
  precision absorbs both overnormalization and wrong-candidate errors.

ERR (Error Reduction Rate) rescales accuracy between the leave-as-is
baseline (0) and a perfect run (100); it goes negative when a system
breaks more tokens than it fixes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from lexnorm.corpus import Corpus, compare_form
from lexnorm.errors import AlignmentError, UndefinedErrError


@dataclass(frozen=True)
class RunOutput:
    """Per-token system predictions, 1:1 with a corpus."""

    predictions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.predictions)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    correct: int
    total: int


@dataclass(frozen=True)
class ScoreReport:
    accuracy: float
    err: float
    precision: float
    recall: float
    f1: float
    confusion: Confusion
    lai_accuracy: float


def _check_alignment(gold: Corpus, run: RunOutput) -> None:
    if gold.n_tokens != len(run):
        raise AlignmentError(
            f"run has {len(run)} predictions but corpus has {gold.n_tokens} tokens"
        )


def _count(gold: Corpus, run: RunOutput) -> Confusion:
    caseless = gold.caseless
    tp = fp = fn = correct = total = 0
    for tok, pred in zip(gold.tokens(), run.predictions):
        total += 1
        c_raw = compare_form(tok.raw, caseless)
        c_gold = compare_form(tok.norm, caseless)
        c_pred = compare_form(pred, caseless)
        if c_pred == c_gold:
            correct += 1
        if c_gold != c_raw:  # token needs normalization
            if c_pred == c_gold:
                tp += 1
            elif c_pred == c_raw:
                fn += 1
            else:
                fp += 1  # wrong candidate: counted against precision
        elif c_pred != c_raw:
            fp += 1  # overnormalization
    return Confusion(tp=tp, fp=fp, fn=fn, correct=correct, total=total)


def word_accuracy(gold: Corpus, run: RunOutput) -> float:
    """Fraction of tokens whose prediction equals the gold norm."""
    _check_alignment(gold, run)
    c = _count(gold, run)
    return c.correct / c.total


def lai_accuracy(gold: Corpus) -> float:
    """Accuracy of the leave-as-is baseline (predict every raw token unchanged)."""
    unchanged = sum(
        1
        for tok in gold.tokens()
        if compare_form(tok.raw, gold.caseless) == compare_form(tok.norm, gold.caseless)
    )
    return unchanged / gold.n_tokens


def err_score(gold: Corpus, run: RunOutput) -> float:
    """Error Reduction Rate: 100 * (acc - acc_LAI) / (1 - acc_LAI).

    Undefined (raises) when no token needs normalization.
    """
    _check_alignment(gold, run)
    lai = lai_accuracy(gold)
    if lai >= 1.0:
        raise UndefinedErrError("corpus has no normalized tokens; ERR is undefined")
    acc = word_accuracy(gold, run)
    return 100.0 * (acc - lai) / (1.0 - lai)


def _prf_from_confusion(c: Confusion) -> tuple[float, float, float]:
    if c.tp + c.fp == 0:
        warnings.warn("precision denominator is zero; reporting 0", stacklevel=3)
        precision = 0.0
    else:
        precision = c.tp / (c.tp + c.fp)
    if c.tp + c.fn == 0:
        warnings.warn("recall denominator is zero; reporting 0", stacklevel=3)
        recall = 0.0
    else:
        recall = c.tp / (c.tp + c.fn)
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def prf_scores(gold: Corpus, run: RunOutput) -> tuple[float, float, float, Confusion]:
    """Precision/recall/F1 with wrong candidates treated as false positives."""
    _check_alignment(gold, run)
    c = _count(gold, run)
    precision, recall, f1 = _prf_from_confusion(c)
    return precision, recall, f1, c


def detection_f1(gold_labels: Sequence[int], pred_labels: Sequence[int]) -> float:
    """F1 of the needs-normalization class; the non-normalized class is excluded."""
    if len(gold_labels) != len(pred_labels):
        raise AlignmentError(
            f"label sequences differ in length: {len(gold_labels)} vs {len(pred_labels)}"
        )
    tp = fp = fn = 0
    for g, p in zip(gold_labels, pred_labels):
        if g and p:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
    if tp + fp == 0 or tp + fn == 0:
        if tp + fn == 0:
            warnings.warn("no positive labels in gold; detection F1 reported as 0")
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
    else:
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def score_run(gold: Corpus, run: RunOutput) -> ScoreReport:
    """Full scoreboard for one run, computed in a single pass."""
    _check_alignment(gold, run)
    c = _count(gold, run)
    acc = c.correct / c.total
    lai = lai_accuracy(gold)
    if lai >= 1.0:
        raise UndefinedErrError("corpus has no normalized tokens; ERR is undefined")
    err = 100.0 * (acc - lai) / (1.0 - lai)
    precision, recall, f1 = _prf_from_confusion(c)
    return ScoreReport(
        accuracy=acc,
        err=err,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=c,
        lai_accuracy=lai,
    )


def save_run(run: RunOutput, corpus: Corpus, path: str | Path) -> None:
    """Prediction file: one norm per line, blank line between sentences.

    Predictions may legitimately be empty (merge continuations), so the
    file can only be read back positionally against the same corpus.
    """
    if len(run) != corpus.n_tokens:
        raise AlignmentError(
            f"run has {len(run)} predictions but corpus has {corpus.n_tokens} tokens"
        )
    blocks = []
    pos = 0
    for sentence in corpus.sentences:
        n = len(sentence)
        blocks.append("\n".join(run.predictions[pos : pos + n]))
        pos += n
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def load_run(path: str | Path, corpus: Corpus) -> RunOutput:
    """Read a prediction file positionally against its reference corpus."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # the final-newline artifact, nothing more
    pos = 0
    preds: list[str] = []
    for i, sentence in enumerate(corpus.sentences):
        for _ in sentence.tokens:
            if pos >= len(lines):
                raise AlignmentError(
                    f"prediction file ended inside sentence {i + 1} of the corpus"
                )
            preds.append(lines[pos])
            pos += 1
        if i < len(corpus.sentences) - 1:
            if pos >= len(lines) or lines[pos] != "":
                raise AlignmentError(
                    f"missing blank separator after sentence {i + 1} in prediction file"
                )
            pos += 1
    if pos < len(lines):
        raise AlignmentError("prediction file has content past the end of the corpus")
    return RunOutput(tuple(preds))


def format_report(report: ScoreReport, language: str) -> str:
    """Human-readable key-value block."""
    c = report.confusion
    lines = [
        f"language   {language}",
        f"tokens     {c.total}",
        f"accuracy   {report.accuracy:.4f}",
        f"lai_acc    {report.lai_accuracy:.4f}",
        f"err        {report.err:.2f}",
        f"precision  {report.precision:.4f}",
        f"recall     {report.recall:.4f}",
        f"f1         {report.f1:.4f}",
        f"tp/fp/fn   {c.tp}/{c.fp}/{c.fn}",
    ]
    return "\n".join(lines)


def report_line(report: ScoreReport, language: str) -> str:
    """Machine-readable single-line record (tab-separated)."""
    c = report.confusion
    fields = [
        language,
        f"{report.accuracy:.6f}",
        f"{report.err:.4f}",
        f"{report.precision:.6f}",
        f"{report.recall:.6f}",
        f"{report.f1:.6f}",
        str(c.tp),
        str(c.fp),
        str(c.fn),
    ]
    return "\t".join(fields)
