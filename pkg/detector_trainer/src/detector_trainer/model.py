"""Byte-level transformer encoder for token tagging.

Words are rendered as their UTF-8 bytes behind a per-word marker token;
the marker position is the word's "first subword" and carries its label.
Self-contained (trained from scratch) so no pretrained checkpoint or
external vocabulary is required.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

PAD_ID = 0
BOS_ID = 1
WORD_ID = 2  # per-word marker; classification happens at these positions
BYTE_OFFSET = 3
VOCAB_SIZE = BYTE_OFFSET + 256


@dataclass(frozen=True)
class ModelDims:
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    max_len: int = 256
    max_word_bytes: int = 12

    def __post_init__(self) -> None:
        if min(self.d_model, self.n_layers, self.n_heads, self.d_ff) < 1:
            raise ValueError("model dimensions must be positive")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")


def encode_words(words: list[str], dims: ModelDims) -> tuple[list[int], list[int]]:
    """Token ids for one sentence plus the marker position of each kept word.

    Words that would overflow max_len are dropped (the caller labels them 0).
    """
    ids = [BOS_ID]
    positions: list[int] = []
    for word in words:
        data = word.encode("utf-8")[: dims.max_word_bytes]
        if len(ids) + 1 + len(data) > dims.max_len:
            break
        positions.append(len(ids))
        ids.append(WORD_ID)
        ids.extend(BYTE_OFFSET + b for b in data)
    return ids, positions


class ByteTagger(nn.Module):
    def __init__(self, dims: ModelDims, dropout: float) -> None:
        super().__init__()
        self.dims = dims
        self.tok_embed = nn.Embedding(VOCAB_SIZE, dims.d_model, padding_idx=PAD_ID)
        self.pos_embed = nn.Embedding(dims.max_len, dims.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=dims.d_model,
            nhead=dims.n_heads,
            dim_feedforward=dims.d_ff,
            dropout=dropout,
            batch_first=True,
        )
        # the nested-tensor fast path is a prototype API and warns; keep the
        # standard (and deterministic) dense path
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=dims.n_layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(dims.d_model, 2)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        """ids: (batch, seq) padded with PAD_ID → logits (batch, seq, 2)."""
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.tok_embed(ids) + self.pos_embed(positions)[None, :, :]
        hidden = self.encoder(x, src_key_padding_mask=ids == PAD_ID)
        return self.head(hidden)


def batch_tensor(id_lists: list[list[int]]) -> torch.Tensor:
    """Right-pad a list of id sequences into one LongTensor."""
    width = max(len(ids) for ids in id_lists)
    out = torch.full((len(id_lists), width), PAD_ID, dtype=torch.long)
    for row, ids in enumerate(id_lists):
        out[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
    return out
