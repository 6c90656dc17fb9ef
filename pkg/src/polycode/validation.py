"""Input checks shared by the estimators and the CLI."""
from __future__ import annotations

from typing import Optional

import torch

from .exceptions import AllMasked, DimensionMismatch, VocabMismatch
from .ingest.storage import Dataset, SampleSet


def check_sample_set(X, task: Optional[str] = None, name: str = "X", allow_empty: bool = False) -> SampleSet:
    """Return ``X`` as a :class:`SampleSet`, accepting a dataset (its train split) too."""
    if isinstance(X, Dataset):
        X = X.split("train")
    if not isinstance(X, SampleSet):
        raise TypeError(f"{name} must be a SampleSet or Dataset, got {type(X).__name__}")
    if task is not None and X.task != task:
        raise ValueError(f"{name} holds {X.task} samples, expected {task}")
    if not allow_empty and len(X) == 0:
        raise ValueError(f"{name} is empty")
    return X


def check_same_dataset(X: SampleSet, reference: SampleSet, name: str = "X") -> None:
    if X.vocab.hash() != reference.vocab.hash():
        raise VocabMismatch(f"{name} was built with a different vocabulary than the fitted data")


def check_square(W: torch.Tensor, d: int, name: str = "W") -> torch.Tensor:
    if W.shape[-2:] != (d, d):
        raise DimensionMismatch(f"{name} has shape {tuple(W.shape)}, expected (..., {d}, {d})")
    return W


def check_pad_mask(pad_mask: Optional[torch.Tensor], shape) -> Optional[torch.Tensor]:
    """Validate a (B, n) padding mask; every sequence needs at least one real position."""
    if pad_mask is None:
        return None
    if tuple(pad_mask.shape) != tuple(shape):
        raise DimensionMismatch(f"pad_mask shape {tuple(pad_mask.shape)} does not match {tuple(shape)}")
    if bool(pad_mask.all(dim=-1).any()):
        raise AllMasked("a sequence has every position masked")
    return pad_mask.bool()
