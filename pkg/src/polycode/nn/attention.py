"""Multi-head self-attention variants.

All functions take batched inputs ``X`` of shape (B, n, d); unbatched
(n, d) inputs are accepted and returned unbatched. Projection matrices act
on row vectors (``x @ W``) and may be shared, shape (d, d), or per sample,
shape (B, d, d), which is how language-generated weights arrive.
``pad_mask`` is True at padding positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import torch
from torch import nn

from ..exceptions import AllMasked, DimensionMismatch, SchemeMismatch

SLOTS = ("Q", "K", "V", "rK", "rV", "aQ", "aK")
TOKEN_SLOTS = ("Q", "K", "V")
PATH_SLOTS = ("rK", "rV", "aQ", "aK")
SCHEME_SLOTS = {
    "none": (),
    "alpha": TOKEN_SLOTS,
    "beta": PATH_SLOTS,
    "gamma": SLOTS,
}
MAX_REL_OFFSET = 32


@dataclass
class AttentionWeightSet:
    """The seven projection matrices of one layer, each tagged static or generated."""

    weights: Dict[str, torch.Tensor]
    tags: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for slot in self.weights:
            if slot not in SLOTS:
                raise KeyError(f"unknown weight slot {slot!r}")
            self.tags.setdefault(slot, "static")
        sides = {tuple(w.shape[-2:]) for w in self.weights.values()}
        if len(sides) > 1 or any(a != b for a, b in sides):
            raise DimensionMismatch(f"weights must all be square with one side, got {sides}")

    @classmethod
    def static(cls, weights: Mapping[str, torch.Tensor]) -> "AttentionWeightSet":
        return cls(dict(weights), {k: "static" for k in weights})

    def __getitem__(self, slot: str) -> torch.Tensor:
        return self.weights[slot]

    def __contains__(self, slot: str) -> bool:
        return slot in self.weights

    def generated_slots(self):
        return tuple(s for s in SLOTS if self.tags.get(s) == "generated")

    @property
    def d(self) -> int:
        return next(iter(self.weights.values())).shape[-1]


@dataclass
class AttentionInput:
    X: torch.Tensor
    pad_mask: Optional[torch.Tensor] = None
    R: Optional[torch.Tensor] = None  # (B, n, n, d) relative path encodings
    A: Optional[torch.Tensor] = None  # (B, n, d) absolute path encodings


def _proj(x: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    if w.dim() == 2:
        return x @ w
    # per-sample weights: x (B, ..., d), w (B, d, e)
    lead = x.shape[1:-1]
    out = torch.bmm(x.reshape(x.shape[0], -1, x.shape[-1]), w)
    return out.reshape(x.shape[0], *lead, w.shape[-1])


def _heads(t: torch.Tensor, heads: int) -> torch.Tensor:
    d = t.shape[-1]
    if d % heads:
        raise DimensionMismatch(f"{heads} heads do not divide d={d}")
    return t.reshape(*t.shape[:-1], heads, d // heads)


def _merge(t: torch.Tensor) -> torch.Tensor:
    return t.reshape(*t.shape[:-2], -1)


def _batched(X, pad_mask):
    if X.dim() == 2:
        return X.unsqueeze(0), (None if pad_mask is None else pad_mask.unsqueeze(0)), True
    return X, pad_mask, False


def masked_softmax(scores: torch.Tensor, pad_mask: Optional[torch.Tensor]) -> torch.Tensor:
    """Softmax over the last axis of (B, H, n, n) scores with padded keys at -inf."""
    if pad_mask is not None:
        if bool(pad_mask.all(dim=-1).any()):
            raise AllMasked("a sequence has no unmasked position")
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
    return torch.softmax(scores, dim=-1)


def _check_d(X, weights):
    if X.shape[-1] != weights.d:
        raise DimensionMismatch(f"input dim {X.shape[-1]} != weight dim {weights.d}")


def attend_vanilla(X, weights: AttentionWeightSet, heads: int = 1, pad_mask=None, return_probs=False):
    """Scaled dot-product attention, ``softmax(q k^T / sqrt(d_h)) v`` per head."""
    X, pad_mask, squeeze = _batched(X, pad_mask)
    _check_d(X, weights)
    q = _heads(_proj(X, weights["Q"]), heads)
    k = _heads(_proj(X, weights["K"]), heads)
    v = _heads(_proj(X, weights["V"]), heads)
    scores = torch.einsum("bihe,bjhe->bhij", q, k) / math.sqrt(q.shape[-1])
    probs = masked_softmax(scores, pad_mask)
    z = _merge(torch.einsum("bhij,bjhe->bihe", probs, v))
    return _finish(z, probs, squeeze, return_probs)


def _finish(z, probs, squeeze, return_probs):
    if squeeze:
        z, probs = z[0], probs[0]
    return (z, probs) if return_probs else z


class PositionTables(nn.Module):
    """Learned absolute positions (with U_Q, U_K) and clipped relative-offset embeddings."""

    def __init__(self, d: int, max_positions: int = 512, max_offset: int = MAX_REL_OFFSET):
        super().__init__()
        self.max_offset = max_offset
        self.absolute = nn.Embedding(max_positions, d)
        self.U_Q = nn.Parameter(torch.empty(d, d))
        self.U_K = nn.Parameter(torch.empty(d, d))
        self.rel_K = nn.Embedding(2 * max_offset + 1, d)
        self.rel_V = nn.Embedding(2 * max_offset + 1, d)
        nn.init.xavier_uniform_(self.U_Q)
        nn.init.xavier_uniform_(self.U_K)
        for emb in (self.absolute, self.rel_K, self.rel_V):
            nn.init.normal_(emb.weight, std=0.02)

    def positions(self, n: int) -> torch.Tensor:
        return self.absolute.weight[:n]

    def offsets(self, n: int) -> torch.Tensor:
        idx = torch.arange(n, device=self.rel_K.weight.device)
        return (idx[None, :] - idx[:, None]).clamp(-self.max_offset, self.max_offset) + self.max_offset

    def relative(self, n: int):
        off = self.offsets(n)
        return self.rel_K(off), self.rel_V(off)


def attend_abs_pos(X, weights: AttentionWeightSet, positions: PositionTables, heads: int = 1,
                   pad_mask=None, return_probs=False):
    """Content and position scores, each scaled by ``sqrt(2 d_h)``."""
    X, pad_mask, squeeze = _batched(X, pad_mask)
    _check_d(X, weights)
    n = X.shape[1]
    p = positions.positions(n)
    q = _heads(_proj(X, weights["Q"]), heads)
    k = _heads(_proj(X, weights["K"]), heads)
    v = _heads(_proj(X, weights["V"]), heads)
    pq = _heads(p @ positions.U_Q, heads)
    pk = _heads(p @ positions.U_K, heads)
    scale = math.sqrt(2 * q.shape[-1])
    scores = (torch.einsum("bihe,bjhe->bhij", q, k) + torch.einsum("ihe,jhe->hij", pq, pk)) / scale
    probs = masked_softmax(scores, pad_mask)
    z = _merge(torch.einsum("bhij,bjhe->bihe", probs, v))
    return _finish(z, probs, squeeze, return_probs)


def attend_rel_pos(X, weights: AttentionWeightSet, positions: PositionTables, heads: int = 1,
                   pad_mask=None, return_probs=False):
    """Relative-offset embeddings added to keys and values (offsets clipped)."""
    X, pad_mask, squeeze = _batched(X, pad_mask)
    _check_d(X, weights)
    n = X.shape[1]
    rk, rv = positions.relative(n)
    q = _heads(_proj(X, weights["Q"]), heads)
    k = _heads(_proj(X, weights["K"]), heads)
    v = _heads(_proj(X, weights["V"]), heads)
    rk, rv = _heads(rk, heads), _heads(rv, heads)
    scores = (torch.einsum("bihe,bjhe->bhij", q, k) + torch.einsum("bihe,ijhe->bhij", q, rk))
    probs = masked_softmax(scores / math.sqrt(q.shape[-1]), pad_mask)
    z = torch.einsum("bhij,bjhe->bihe", probs, v) + torch.einsum("bhij,ijhe->bihe", probs, rv)
    return _finish(_merge(z), probs, squeeze, return_probs)


def attend_tptrans(inp: AttentionInput, weights: AttentionWeightSet, heads: int = 1, return_probs=False):
    """Path-biased attention.

    score_ij = q_i . (k_j + r_ij W_rK) / sqrt(d_h) + (a_i W_aQ) . (a_j W_aK) / sqrt(d_h)
    z_i      = sum_j softmax(score)_ij (x_j W_V + r_ij W_rV)
    Missing ``R`` or ``A`` count as zero encodings.
    """
    X, pad_mask, squeeze = _batched(inp.X, inp.pad_mask)
    R, A = inp.R, inp.A
    if squeeze:
        R = None if R is None else R.unsqueeze(0)
        A = None if A is None else A.unsqueeze(0)
    _check_d(X, weights)
    B, n, d = X.shape
    if R is not None and tuple(R.shape) != (B, n, n, d):
        raise DimensionMismatch(f"R has shape {tuple(R.shape)}, expected {(B, n, n, d)}")
    if A is not None and tuple(A.shape) != (B, n, d):
        raise DimensionMismatch(f"A has shape {tuple(A.shape)}, expected {(B, n, d)}")
    q = _heads(_proj(X, weights["Q"]), heads)
    k = _heads(_proj(X, weights["K"]), heads)
    v = _heads(_proj(X, weights["V"]), heads)
    scale = math.sqrt(q.shape[-1])
    scores = torch.einsum("bihe,bjhe->bhij", q, k)
    if R is not None:
        rk = _heads(_proj(R, weights["rK"]), heads)
        scores = scores + torch.einsum("bihe,bijhe->bhij", q, rk)
    scores = scores / scale
    if A is not None:
        aq = _heads(_proj(A, weights["aQ"]), heads)
        ak = _heads(_proj(A, weights["aK"]), heads)
        scores = scores + torch.einsum("bihe,bjhe->bhij", aq, ak) / scale
    probs = masked_softmax(scores, pad_mask)
    z = torch.einsum("bhij,bjhe->bihe", probs, v)
    if R is not None:
        rv = _heads(_proj(R, weights["rV"]), heads)
        z = z + torch.einsum("bhij,bijhe->bihe", probs, rv)
    return _finish(_merge(z), probs, squeeze, return_probs)


def merge_weight_sets(static: AttentionWeightSet, generated: AttentionWeightSet, scheme: str) -> AttentionWeightSet:
    """Slot-wise substitution: the scheme's slots come from ``generated``."""
    try:
        wanted = SCHEME_SLOTS[scheme]
    except KeyError:
        raise SchemeMismatch(f"unknown scheme {scheme!r}") from None
    if set(generated.generated_slots()) != set(wanted):
        raise SchemeMismatch(
            f"scheme {scheme!r} expects generated {sorted(wanted)}, got {sorted(generated.generated_slots())}")
    weights, tags = {}, {}
    for slot in SLOTS:
        src = generated if slot in wanted else static
        if slot in src:
            weights[slot] = src[slot]
            tags[slot] = src.tags[slot]
    return AttentionWeightSet(weights, tags)


def attend_meta(inp: AttentionInput, static: AttentionWeightSet, generated: AttentionWeightSet,
                scheme: str, heads: int = 1, return_probs=False):
    """Path-biased attention with the scheme's slots taken from language-generated weights."""
    return attend_tptrans(inp, merge_weight_sets(static, generated, scheme), heads, return_probs)
