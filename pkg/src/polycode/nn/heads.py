"""Task heads: masked-token classifier and pointer-augmented name decoder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import torch
import torch.nn.functional as F
from torch import nn

from ..exceptions import BadMaskPosition
from ..ingest.vocab import BOS_ID, EOS_ID, MASK_ID, PAD_ID

LOG_FLOOR = 1e-12


def pointer_mix(vocab_dist: torch.Tensor, copy_attn: torch.Tensor, input_ids: torch.Tensor,
                gate) -> torch.Tensor:
    """``out[v] = g * vocab_dist[v] + (1 - g) * sum_{i: input_ids[i] = v} copy_attn[i]``.

    Shapes: ``vocab_dist`` (..., V), ``copy_attn`` (..., n), ``input_ids``
    broadcastable to ``copy_attn``, ``gate`` scalar or (..., 1).
    """
    gate = torch.as_tensor(gate, dtype=vocab_dist.dtype, device=vocab_dist.device)
    ids = torch.as_tensor(input_ids, device=vocab_dist.device).long().expand_as(copy_attn)
    copied = torch.zeros_like(vocab_dist).scatter_add(-1, ids, copy_attn.to(vocab_dist.dtype))
    return gate * vocab_dist + (1 - gate) * copied


def sequence_loss(pred_dists: torch.Tensor, target_ids: torch.Tensor, pad_id: int = PAD_ID) -> torch.Tensor:
    """Mean negative log-likelihood of ``target_ids`` under probability rows, padding skipped."""
    picked = pred_dists.gather(-1, target_ids.unsqueeze(-1)).squeeze(-1)
    keep = target_ids != pad_id
    nll = -torch.log(picked.clamp_min(LOG_FLOOR))
    return (nll * keep).sum() / keep.sum().clamp_min(1)


def completion_loss(logits: torch.Tensor, answer_id: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits, answer_id)


class CompletionHead(nn.Module):
    def __init__(self, d: int, vocab_size: int):
        super().__init__()
        self.out = nn.Linear(d, vocab_size)

    def forward(self, encoder_output, mask_position, input_ids=None):
        return completion_logits(self, encoder_output, mask_position, input_ids)


def completion_logits(head: CompletionHead, encoder_output: torch.Tensor, mask_position,
                      input_ids: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Vocabulary logits read off the encoder vector at each mask position.

    ``encoder_output`` is (B, n, d) with ``mask_position`` (B,), or (n, d)
    with a scalar position.
    """
    single = encoder_output.dim() == 2
    if single:
        encoder_output = encoder_output.unsqueeze(0)
        input_ids = None if input_ids is None else torch.as_tensor(input_ids).unsqueeze(0)
    pos = torch.as_tensor(mask_position, device=encoder_output.device).long().reshape(-1)
    B, n, _ = encoder_output.shape
    if pos.shape[0] != B or bool((pos < 0).any()) or bool((pos >= n).any()):
        raise BadMaskPosition(f"mask positions {pos.tolist()} out of range for length {n}")
    if input_ids is not None:
        at = torch.as_tensor(input_ids, device=encoder_output.device)[torch.arange(B), pos]
        if bool((at != MASK_ID).any()):
            raise BadMaskPosition("mask position does not hold the <MASK> token")
    logits = head.out(encoder_output[torch.arange(B, device=encoder_output.device), pos])
    return logits[0] if single else logits


def sinusoidal(n: int, d: int, device=None, dtype=torch.float32) -> torch.Tensor:
    pos = torch.arange(n, device=device, dtype=dtype).unsqueeze(1)
    div = torch.exp(torch.arange(0, d, 2, device=device, dtype=dtype) * (-math.log(10000.0) / d))
    pe = torch.zeros(n, d, device=device, dtype=dtype)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div)[:, : d // 2]
    return pe


class DecoderLayer(nn.Module):
    """Pre-norm decoder layer: causal self-attention, cross-attention, feed-forward."""

    def __init__(self, d: int, heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(d, heads, dropout=0.0, batch_first=True)
        self.cross_attn = nn.MultiheadAttention(d, heads, dropout=0.0, batch_first=True)
        self.ffn = nn.Sequential(nn.Linear(d, ffn_dim), nn.ReLU(), nn.Linear(ffn_dim, d))
        self.norms = nn.ModuleList(nn.LayerNorm(d) for _ in range(3))
        self.drop = nn.Dropout(dropout)

    def forward(self, y, memory, memory_pad_mask):
        T = y.shape[1]
        causal = torch.triu(torch.ones(T, T, dtype=torch.bool, device=y.device), diagonal=1)
        h = self.norms[0](y)
        y = y + self.drop(self.self_attn(h, h, h, attn_mask=causal, need_weights=False)[0])
        h = self.norms[1](y)
        ctx, attn = self.cross_attn(h, memory, memory, key_padding_mask=memory_pad_mask,
                                    need_weights=True, average_attn_weights=True)
        y = y + self.drop(ctx)
        y = y + self.drop(self.ffn(self.norms[2](y)))
        return y, attn


@dataclass
class DecoderState:
    """Greedy-decoding state; the prefix always starts with ``<BOS>``.

    Steps recompute the whole prefix instead of caching per-layer keys.
    """

    prefix: torch.Tensor  # (B, t)
    finished: torch.Tensor  # (B,)
    outputs: List[List[int]] = field(default_factory=list)


class SummaryDecoder(nn.Module):
    def __init__(self, vocab_size: int, d: int, word_dim: int, heads: int, ffn_dim: int, layers: int,
                 dropout: float, pointer: bool = True):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, word_dim, padding_idx=PAD_ID)
        self.embed_proj = nn.Linear(word_dim, d)
        self.layers = nn.ModuleList(DecoderLayer(d, heads, ffn_dim, dropout) for _ in range(layers))
        self.norm = nn.LayerNorm(d)
        self.out = nn.Linear(d, vocab_size)
        self.gate = nn.Linear(d, 1) if pointer else None
        self.drop = nn.Dropout(dropout)

    @property
    def pointer(self) -> bool:
        return self.gate is not None

    def forward(self, prev_ids, memory, memory_pad_mask, input_ids):
        """Output distributions (B, T, V) for teacher-forced ``prev_ids`` (B, T)."""
        y = self.embed_proj(self.embedding(prev_ids))
        y = self.drop(y + sinusoidal(y.shape[1], y.shape[2], y.device, y.dtype))
        attn = None
        for layer in self.layers:
            y, attn = layer(y, memory, memory_pad_mask)
        y = self.norm(y)
        dist = torch.softmax(self.out(y), dim=-1)
        if self.gate is None or attn is None:
            return dist
        g = torch.sigmoid(self.gate(y))
        ids = input_ids.unsqueeze(1).expand(-1, y.shape[1], -1)
        return pointer_mix(dist, attn, ids, g)


@torch.no_grad()
def greedy_decode(decoder: SummaryDecoder, encoder_output: torch.Tensor, input_ids: torch.Tensor,
                  max_len: int, memory_pad_mask: Optional[torch.Tensor] = None) -> List[List[int]]:
    """Argmax decoding until ``<EOS>`` or ``max_len`` subtokens; ``<EOS>`` is not returned."""
    if encoder_output.dim() == 2:
        encoder_output, input_ids = encoder_output.unsqueeze(0), input_ids.unsqueeze(0)
        if memory_pad_mask is not None:
            memory_pad_mask = memory_pad_mask.unsqueeze(0)
    B = encoder_output.shape[0]
    if memory_pad_mask is None:
        memory_pad_mask = input_ids == PAD_ID
    state = DecoderState(torch.full((B, 1), BOS_ID, dtype=torch.long, device=encoder_output.device),
                         torch.zeros(B, dtype=torch.bool, device=encoder_output.device),
                         [[] for _ in range(B)])
    for _ in range(max_len):
        dist = decoder(state.prefix, encoder_output, memory_pad_mask, input_ids)[:, -1]
        nxt = dist.argmax(dim=-1)
        for b in range(B):
            if not state.finished[b]:
                if int(nxt[b]) == EOS_ID:
                    state.finished[b] = True
                else:
                    state.outputs[b].append(int(nxt[b]))
        if bool(state.finished.all()):
            break
        state.prefix = torch.cat([state.prefix, nxt.unsqueeze(1)], dim=1)
    return state.outputs
