"""Training loop with per-epoch dev F1 and best-checkpoint selection."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .data import Sentence, derive_labels, read_corpus
from .model import ByteTagger, ModelDims, batch_tensor, encode_words


class TrainerError(RuntimeError):
    """Training could not proceed (resources, incompatible checkpoint, ...)."""


@dataclass(frozen=True)
class TrainConfig:
    base_model_id: str = "byte-transformer-mini"
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 20
    dropout: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def positive_f1(gold: list[int], pred: list[int]) -> float:
    """F1 of the needs-normalization class; the O class is excluded."""
    tp = sum(1 for g, p in zip(gold, pred) if g == 1 and p == 1)
    fp = sum(1 for g, p in zip(gold, pred) if g == 0 and p == 1)
    fn = sum(1 for g, p in zip(gold, pred) if g == 1 and p == 0)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _examples(sentences: list[Sentence], dims: ModelDims) -> list[tuple[list[int], list[int], list[int]]]:
    """(token ids, marker positions, labels-at-kept-positions) per sentence."""
    labels = derive_labels(sentences)
    out = []
    for sent, sent_labels in zip(sentences, labels):
        ids, positions = encode_words([raw for raw, _ in sent], dims)
        out.append((ids, positions, sent_labels[: len(positions)]))
    return out


def predict_sentences(
    model: ByteTagger, sentences: list[Sentence], batch_size: int = 64
) -> list[list[int]]:
    """Label every word; words dropped by the length cap default to 0."""
    model.eval()
    out: list[list[int]] = []
    with torch.no_grad():
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start : start + batch_size]
            encoded = [
                encode_words([raw for raw, _ in sent], model.dims) for sent in chunk
            ]
            logits = model(batch_tensor([ids for ids, _ in encoded]))
            for row, (sent, (_, positions)) in enumerate(zip(chunk, encoded)):
                flags = logits[row, positions].argmax(dim=-1).tolist()
                flags += [0] * (len(sent) - len(flags))
                out.append(flags)
    return out


def train(
    train_path: str | Path,
    dev_path: str | Path,
    cfg: TrainConfig,
    out_dir: str | Path,
) -> Path:
    """Train, checkpoint the best-dev-F1 epoch, and write a training log.

    The log is timestamp-free: identical data, config, and seed reproduce
    it byte for byte.
    """
    train_sents = read_corpus(train_path)
    dev_sents = read_corpus(dev_path)
    dims = ModelDims()

    torch.manual_seed(cfg.seed)
    model = ByteTagger(dims, dropout=cfg.dropout)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    examples = _examples(train_sents, dims)
    dev_gold = [flag for sent in derive_labels(dev_sents) for flag in sent]
    shuffler = random.Random(cfg.seed)

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    log_lines: list[str] = []
    best_f1 = -1.0
    best_epoch = 0
    best_state: dict | None = None

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = list(range(len(examples)))
        shuffler.shuffle(order)
        total_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [examples[i] for i in order[start : start + cfg.batch_size]]
            ids = batch_tensor([ex[0] for ex in batch])
            logits = model(ids)
            picked = []
            targets = []
            for row, (_, positions, labels) in enumerate(batch):
                picked.append(logits[row, positions])
                targets.extend(labels)
            if not targets:
                continue
            try:
                loss = loss_fn(torch.cat(picked), torch.tensor(targets))
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            except RuntimeError as exc:
                if "out of memory" in str(exc).lower():
                    raise TrainerError(
                        f"out of memory at batch_size={cfg.batch_size}; "
                        "reduce --batch-size and retry"
                    ) from exc
                raise
            total_loss += loss.item()
            n_batches += 1

        dev_pred = [f for sent in predict_sentences(model, dev_sents) for f in sent]
        dev_f1 = positive_f1(dev_gold, dev_pred)
        mean_loss = total_loss / max(1, n_batches)
        is_best = dev_f1 > best_f1
        if is_best:
            best_f1 = dev_f1
            best_epoch = epoch
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
        log_lines.append(
            f"epoch {epoch}/{cfg.epochs} train_loss {mean_loss:.4f} "
            f"dev_f1 {dev_f1:.4f}{' *' if is_best else ''}"
        )

    assert best_state is not None
    log_lines.append(f"best dev_f1 {best_f1:.4f} at epoch {best_epoch}")
    torch.save(best_state, out_path / "model.pt")
    (out_path / "config.json").write_text(
        json.dumps({"train": asdict(cfg), "dims": asdict(dims)}, indent=2) + "\n",
        encoding="utf-8",
    )
    (out_path / "training.log").write_text(
        "\n".join(log_lines) + "\n", encoding="utf-8"
    )
    return out_path


def load_model(model_dir: str | Path) -> ByteTagger:
    """Rebuild the tagger from a checkpoint directory (eval mode)."""
    path = Path(model_dir)
    try:
        meta = json.loads((path / "config.json").read_text(encoding="utf-8"))
        dims = ModelDims(**meta["dims"])
        model = ByteTagger(dims, dropout=meta["train"]["dropout"])
        model.load_state_dict(torch.load(path / "model.pt", weights_only=True))
    except FileNotFoundError as exc:
        raise TrainerError(f"not a model directory: {path} ({exc})") from exc
    model.eval()
    return model
