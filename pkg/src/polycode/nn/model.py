"""Encoder stack and the task models built on it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import torch
from torch import nn

from ..config import RunConfig
from ..ingest.vocab import BOS_ID, PAD_ID
from .attention import (SCHEME_SLOTS, SLOTS, TOKEN_SLOTS, AttentionInput, AttentionWeightSet, PositionTables,
                        attend_abs_pos, attend_rel_pos, attend_tptrans, attend_vanilla)
from .heads import CompletionHead, SummaryDecoder, completion_logits, greedy_decode, sinusoidal
from .meta import GeneratorBank, LanguageConditioner, weight_set_for
from .path_encoder import PathEncoder


@dataclass
class Batch:
    """Padded model inputs. ``pad_mask`` is True on padding."""

    tokens: torch.Tensor  # (B, n)
    pad_mask: torch.Tensor  # (B, n)
    language: torch.Tensor  # (B,)
    rel_ids: Optional[torch.Tensor] = None  # (B, n, n) path-table ids
    abs_ids: Optional[torch.Tensor] = None  # (B, n)
    mask_position: Optional[torch.Tensor] = None  # (B,)
    answer: Optional[torch.Tensor] = None  # (B,)
    target: Optional[torch.Tensor] = None  # (B, T) name ids ending in <EOS>, PAD-padded

    def to(self, device) -> "Batch":
        return Batch(**{k: (v.to(device) if torch.is_tensor(v) else v) for k, v in self.__dict__.items()})


class EncoderLayer(nn.Module):
    """Pre-norm residual block around one attention variant and a feed-forward net."""

    def __init__(self, d: int, heads: int, ffn_dim: int, dropout: float, variant: str,
                 generated_slots=(), max_positions: int = 512, max_rel_offset: int = 32):
        super().__init__()
        self.variant = variant
        self.heads = heads
        used = SLOTS if variant == "path" else TOKEN_SLOTS
        self.static = nn.ParameterDict(
            {slot: nn.Parameter(nn.init.xavier_uniform_(torch.empty(d, d)))
             for slot in used if slot not in generated_slots})
        self.positions = (PositionTables(d, max_positions, max_rel_offset)
                          if variant in ("abs_pos", "rel_pos") else None)
        self.out = nn.Linear(d, d)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(nn.Linear(d, ffn_dim), nn.ReLU(), nn.Linear(ffn_dim, d))
        self.drop = nn.Dropout(dropout)

    def static_set(self) -> AttentionWeightSet:
        return AttentionWeightSet.static(dict(self.static.items()))

    def attend(self, h, pad_mask, weights: AttentionWeightSet, R=None, A=None):
        if self.variant == "vanilla":
            return attend_vanilla(h, weights, self.heads, pad_mask)
        if self.variant == "abs_pos":
            return attend_abs_pos(h, weights, self.positions, self.heads, pad_mask)
        if self.variant == "rel_pos":
            return attend_rel_pos(h, weights, self.positions, self.heads, pad_mask)
        return attend_tptrans(AttentionInput(h, pad_mask, R, A), weights, self.heads)

    def forward(self, x, pad_mask, weights: AttentionWeightSet, R=None, A=None):
        x = x + self.drop(self.out(self.attend(self.norm1(x), pad_mask, weights, R, A)))
        return x + self.drop(self.ffn(self.norm2(x)))


class CodeEncoder(nn.Module):
    """Token embedding, optional path encoders and language generators, layer stack."""

    def __init__(self, config: RunConfig, vocab_size: int, n_node_types: int, n_languages: int,
                 max_path_len: int = 32):
        super().__init__()
        m, meta = config.model, config.meta
        self.variant = m.variant
        self.d = m.d
        self.embedding = nn.Embedding(vocab_size, m.word_dim, padding_idx=PAD_ID)
        self.embed_proj = nn.Linear(m.word_dim, m.d)
        self.drop = nn.Dropout(m.dropout)
        self.scheme = meta.scheme if m.variant == "path" else "none"
        generated = SCHEME_SLOTS[self.scheme]
        self.layers = nn.ModuleList(
            EncoderLayer(m.d, m.heads, m.ffn_dim, m.dropout, m.variant, generated, m.max_positions,
                         m.max_rel_offset)
            for _ in range(m.layers))
        self.norm = nn.LayerNorm(m.d) if m.layers else nn.Identity()
        if m.variant == "path":
            self.rel_encoder = PathEncoder(n_node_types, m.d, m.node_dim, m.path_hidden, max_path_len)
            self.abs_encoder = (self.rel_encoder if m.share_path_encoder else
                                PathEncoder(n_node_types, m.d, m.node_dim, m.path_hidden, max_path_len))
        else:
            self.rel_encoder = self.abs_encoder = None
        if self.scheme != "none":
            self.conditioner = LanguageConditioner(n_languages, meta.d_T, meta.d_P)
            self.generators = GeneratorBank(m.layers, m.d, meta.d_P, self.scheme)
        else:
            self.conditioner = self.generators = None
        self.register_buffer("path_matrix", torch.zeros(1, max_path_len, dtype=torch.long), persistent=False)

    def set_path_table(self, table) -> None:
        """Cache the padded path table so batches only gather the ids they use."""
        from .path_encoder import pad_paths

        self.path_matrix = pad_paths(table.entries, width=max(table.max_len, 1),
                                     device=self.embed_proj.weight.device)

    def encode_paths(self, batch: Batch):
        if self.rel_encoder is None or batch.rel_ids is None:
            return None, None
        rel, ab = batch.rel_ids.long(), batch.abs_ids.long()
        if self.abs_encoder is self.rel_encoder:
            uniq, inv = torch.unique(torch.cat([rel.reshape(-1), ab.reshape(-1)]), return_inverse=True)
            enc = self.rel_encoder(self.path_matrix[uniq])
            R = enc[inv[:rel.numel()]].reshape(*rel.shape, -1)
            A = enc[inv[rel.numel():]].reshape(*ab.shape, -1)
            return R, A
        out = []
        for ids, encoder in ((rel, self.rel_encoder), (ab, self.abs_encoder)):
            uniq, inv = torch.unique(ids.reshape(-1), return_inverse=True)
            out.append(encoder(self.path_matrix[uniq])[inv].reshape(*ids.shape, -1))
        return tuple(out)

    def layer_weights(self, language: torch.Tensor):
        """Weight set per layer; generated slots are (B, d, d), one matrix per language present."""
        if self.generators is None:
            return [layer.static_set() for layer in self.layers]
        uniq, inv = torch.unique(language.long(), return_inverse=True)
        P = self.conditioner(uniq)
        sets = []
        for l, layer in enumerate(self.layers):
            ws = weight_set_for(self.generators, l, P, layer.static_set())
            weights = {s: (w[inv] if ws.tags[s] == "generated" else w) for s, w in ws.weights.items()}
            sets.append(AttentionWeightSet(weights, dict(ws.tags)))
        return sets

    def forward(self, batch: Batch) -> torch.Tensor:
        x = self.embed_proj(self.embedding(batch.tokens))
        if self.variant == "vanilla":
            x = x + sinusoidal(x.shape[1], x.shape[2], x.device, x.dtype)
        x = self.drop(x)
        if not len(self.layers):
            return x
        R, A = self.encode_paths(batch)
        for layer, weights in zip(self.layers, self.layer_weights(batch.language)):
            x = layer(x, batch.pad_mask, weights, R, A)
        return self.norm(x)


class CodeModel(nn.Module):
    """Encoder plus the task head selected by ``config.task``."""

    def __init__(self, config: RunConfig, vocab_size: int, n_node_types: int, n_languages: int,
                 max_path_len: int = 32):
        super().__init__()
        m = config.model
        self.task = config.task
        self.max_decode_len = m.max_decode_len
        self.encoder = CodeEncoder(config, vocab_size, n_node_types, n_languages, max_path_len)
        if config.task == "completion":
            self.head = CompletionHead(m.d, vocab_size)
        else:
            self.head = SummaryDecoder(vocab_size, m.d, m.word_dim, m.heads, m.ffn_dim, m.decoder_layers,
                                       m.dropout, m.pointer)

    def forward(self, batch: Batch) -> torch.Tensor:
        """Completion: logits (B, V). Summarization: teacher-forced distributions (B, T, V)."""
        memory = self.encoder(batch)
        if self.task == "completion":
            return completion_logits(self.head, memory, batch.mask_position, batch.tokens)
        prev = torch.cat([torch.full_like(batch.target[:, :1], BOS_ID), batch.target[:, :-1]], dim=1)
        return self.head(prev, memory, batch.pad_mask, batch.tokens)

    @torch.no_grad()
    def decode(self, batch: Batch, max_len: Optional[int] = None):
        memory = self.encoder(batch)
        return greedy_decode(self.head, memory, batch.tokens, max_len or self.max_decode_len, batch.pad_mask)

    @torch.no_grad()
    def embed(self, batch: Batch) -> torch.Tensor:
        """Mean of the final encoder vectors over unpadded positions, (B, d)."""
        memory = self.encoder(batch)
        keep = (~batch.pad_mask).unsqueeze(-1).to(memory.dtype)
        return (memory * keep).sum(1) / keep.sum(1).clamp_min(1)

    def parameter_counts(self) -> Dict[str, int]:
        counts = {"total": sum(p.numel() for p in self.parameters())}
        if self.encoder.generators is not None:
            counts["generators"] = sum(p.numel() for p in self.encoder.generators.parameters())
            counts["conditioner"] = sum(p.numel() for p in self.encoder.conditioner.parameters())
        return counts
