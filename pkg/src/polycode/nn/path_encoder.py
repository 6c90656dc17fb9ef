"""Bi-directional GRU encoding of AST node-type sequences."""
from __future__ import annotations

from typing import Optional, Sequence

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from ..exceptions import PathTooLong, UnknownNodeType


class PathEncoder(nn.Module):
    """Embed node types, run a one-layer BiGRU, project ``[h_fwd; h_bwd]`` to ``d_model``.

    Padding id 0 marks the end of a path; an all-padding (empty) path
    encodes to the zero vector without touching the recurrence.
    """

    def __init__(self, n_node_types: int, d_model: int, node_dim: int = 64, hidden: int = 64,
                 max_len: int = 32):
        super().__init__()
        self.n_node_types = n_node_types
        self.d_model = d_model
        self.max_len = max_len
        self.embedding = nn.Embedding(n_node_types, node_dim, padding_idx=0)
        self.gru = nn.GRU(node_dim, hidden, num_layers=1, batch_first=True, bidirectional=True)
        self.proj = nn.Linear(2 * hidden, d_model)

    def _check(self, node_ids: torch.Tensor, lengths: torch.Tensor) -> None:
        if node_ids.numel() and (int(node_ids.min()) < 0 or int(node_ids.max()) >= self.n_node_types):
            raise UnknownNodeType(f"node-type ids must lie in [0, {self.n_node_types})")
        if lengths.numel() and int(lengths.max()) > self.max_len:
            raise PathTooLong(f"path of length {int(lengths.max())} exceeds {self.max_len}")

    def forward(self, node_ids: torch.Tensor) -> torch.Tensor:
        """``node_ids``: (P, L) right-padded with 0. Returns (P, d_model)."""
        node_ids = node_ids.long()
        lengths = (node_ids != 0).sum(dim=1)
        self._check(node_ids, lengths)
        out = self.proj.weight.new_zeros(node_ids.shape[0], self.d_model)
        live = (lengths > 0).nonzero(as_tuple=True)[0]
        if live.numel() == 0:
            return out
        ids = node_ids[live]
        width = int(lengths.max())
        emb = self.embedding(ids[:, :width])
        packed = pack_padded_sequence(emb, lengths[live].cpu(), batch_first=True, enforce_sorted=False)
        _, h_n = self.gru(packed)  # (2, P_live, hidden): forward final, backward final
        enc = self.proj(torch.cat([h_n[0], h_n[1]], dim=-1))
        return out.index_copy(0, live, enc)

    def encode_path(self, node_ids: Sequence[int]) -> torch.Tensor:
        ids = torch.as_tensor(list(node_ids), dtype=torch.long).reshape(1, -1)
        if ids.shape[1] == 0:
            return self.proj.weight.new_zeros(self.d_model)
        return self(ids)[0]

    def encode_table(self, table, ids: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Encode every entry of a PathTable (or the rows ``ids``) at once."""
        entries = table.entries if ids is None else [table.entries[int(i)] for i in ids]
        return self(pad_paths(entries, device=self.proj.weight.device))


def pad_paths(entries: Sequence[Sequence[int]], width: Optional[int] = None, device=None) -> torch.Tensor:
    width = max([len(e) for e in entries] + [1]) if width is None else width
    out = torch.zeros(len(entries), width, dtype=torch.long, device=device)
    for row, e in enumerate(entries):
        if e:
            out[row, :len(e)] = torch.as_tensor(e, dtype=torch.long)
    return out
