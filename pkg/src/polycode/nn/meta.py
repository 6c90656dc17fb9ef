"""Language-conditioned generation of attention projection matrices."""
from __future__ import annotations

from typing import Dict, Iterable, Optional

import torch
from torch import nn

from ..exceptions import DimensionMismatch, UnknownLanguage
from .attention import SCHEME_SLOTS, SLOTS, AttentionWeightSet


class LanguageConditioner(nn.Module):
    """Language embedding table followed by an affine projection to ``d_P``."""

    def __init__(self, n_languages: int, d_T: int, d_P: int):
        super().__init__()
        self.embedding = nn.Embedding(n_languages, d_T)
        self.projection = nn.Linear(d_T, d_P)

    @property
    def n_languages(self) -> int:
        return self.embedding.num_embeddings

    def forward(self, language: torch.Tensor) -> torch.Tensor:
        language = torch.as_tensor(language, dtype=torch.long, device=self.embedding.weight.device)
        if language.numel() and (int(language.min()) < 0 or int(language.max()) >= self.n_languages):
            raise UnknownLanguage(f"language codes must lie in [0, {self.n_languages})")
        return self.projection(self.embedding(language))


def project_language(conditioner: LanguageConditioner, language) -> torch.Tensor:
    code = getattr(language, "code", language)
    return conditioner(code)


class FactorizedGenerator(nn.Module):
    """Produces one d x d matrix as ``M' diag(P) M`` for a slot."""

    def __init__(self, d: int, d_P: int, slot: str):
        super().__init__()
        if slot not in SLOTS:
            raise KeyError(f"unknown slot {slot!r}")
        self.slot = slot
        self.M = nn.Parameter(torch.randn(d_P, d) / d ** 0.5)
        self.M_prime = nn.Parameter(torch.randn(d, d_P) / d_P ** 0.5)

    @property
    def d(self) -> int:
        return self.M.shape[1]

    @property
    def d_P(self) -> int:
        return self.M.shape[0]

    def forward(self, P: torch.Tensor) -> torch.Tensor:
        return generate_weight(self, P)


def generate_weight(gen: FactorizedGenerator, P: torch.Tensor) -> torch.Tensor:
    """``W[a, b] = sum_k M'[a, k] P[k] M[k, b]`` for P of shape (d_P,) or (B, d_P).

    The diagonal is never built; rows of M are scaled by P instead.
    """
    if P.shape[-1] != gen.d_P:
        raise DimensionMismatch(f"language code has dim {P.shape[-1]}, generator expects {gen.d_P}")
    return gen.M_prime @ (P.unsqueeze(-1) * gen.M)


class GeneratorBank(nn.Module):
    """Per-layer generators for the slots a scheme populates."""

    def __init__(self, n_layers: int, d: int, d_P: int, scheme: str):
        super().__init__()
        if scheme not in SCHEME_SLOTS:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.scheme = scheme
        self.layers = nn.ModuleList(
            nn.ModuleDict({slot: FactorizedGenerator(d, d_P, slot) for slot in SCHEME_SLOTS[scheme]})
            for _ in range(n_layers))

    def slots(self, layer: int):
        return tuple(self.layers[layer].keys())

    def __len__(self) -> int:
        return len(self.layers)


def weight_set_for(bank: Optional[GeneratorBank], layer: int, P: torch.Tensor,
                   static: "AttentionWeightSet | Dict[str, torch.Tensor]") -> AttentionWeightSet:
    """Generated matrices for the bank's slots, static ones for the rest."""
    if not isinstance(static, AttentionWeightSet):
        static = AttentionWeightSet.static(static)
    gens = {}
    if bank is not None and len(bank):
        if not 0 <= layer < len(bank):
            raise IndexError(f"layer {layer} out of range")
        gens = bank.layers[layer]
    weights, tags = {}, {}
    for slot in SLOTS:
        if slot in gens:
            weights[slot] = generate_weight(gens[slot], P)
            tags[slot] = "generated"
        elif slot in static:
            weights[slot] = static[slot]
            tags[slot] = static.tags[slot]
    return AttentionWeightSet(weights, tags)


def generator_parameter_count(gen: FactorizedGenerator) -> int:
    return sum(p.numel() for p in gen.parameters())


def scheme_slots(scheme: str) -> Iterable[str]:
    return SCHEME_SLOTS[scheme]
