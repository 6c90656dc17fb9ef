"""scikit-learn style wrappers around training, prediction and embedding."""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import training
from .config import RunConfig, load_config
from .ingest.vocab import EOS_ID
from .validation import check_same_dataset, check_sample_set


class _CodeEstimator(BaseEstimator):
    _task = ""

    def __init__(self, preset: Optional[str] = None, variant: str = "path", scheme: str = "alpha",
                 epochs: Optional[int] = None, lr: Optional[float] = None, batch_size: Optional[int] = None,
                 seed: int = 0, overrides: Sequence[str] = ()):
        self.preset = preset
        self.variant = variant
        self.scheme = scheme
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.overrides = overrides

    def make_config(self) -> RunConfig:
        items = [f"task={self._task}", f"model.variant={self.variant}", f"meta.scheme={self.scheme}",
                 f"train.seed={self.seed}"]
        for key, value in (("train.epochs", self.epochs), ("optim.lr", self.lr),
                           ("train.batch_size", self.batch_size)):
            if value is not None:
                items.append(f"{key}={value}")
        cfg = load_config(self.preset or f"desk-{self._task}", [*items, *self.overrides])
        return cfg.validate()

    def fit(self, X, y=None, X_valid=None):
        """Train on the samples of ``X``; targets live inside the samples so ``y`` is ignored."""
        X = check_sample_set(X, self._task)
        valid = None if X_valid is None else check_sample_set(X_valid, self._task, "X_valid")
        self.config_ = self.make_config()
        result = training.train(self.config_, X, valid)
        self.model_ = result.model
        self.history_ = result.history
        self.initial_loss_ = result.initial_loss
        self.train_samples_ = X
        if valid is not None:
            self.model_.load_state_dict(result.best.model_state)
        self.model_.eval()
        return self

    def _checked(self, X):
        check_is_fitted(self, "model_")
        X = check_sample_set(X, self._task)
        check_same_dataset(X, self.train_samples_)
        return X

    def transform(self, X) -> np.ndarray:
        """Mean-pooled encoder vectors, shape (n_samples, d)."""
        X = self._checked(X)
        return training.embed(self.model_, X)

    def evaluate(self, X):
        X = self._checked(X)
        return training.evaluate(self.model_, X)

    def score(self, X, y=None) -> float:
        """F1 for summarization, top-1 accuracy for completion."""
        return self.evaluate(X).headline


class CodeCompleter(_CodeEstimator):
    """Predicts the subtoken hidden behind ``<MASK>``."""

    _task = "completion"

    def predict(self, X) -> np.ndarray:
        return self.predict_logits(X).argmax(axis=1)

    def predict_logits(self, X) -> np.ndarray:
        X = self._checked(X)
        rows = training.predict(self.model_, X)
        return np.stack(rows)

    def predict_topk(self, X, k: int = 5) -> np.ndarray:
        logits = self.predict_logits(X)
        return np.argsort(-logits, axis=1, kind="stable")[:, :k]


class MethodNameSummarizer(_CodeEstimator):
    """Generates a function name as a subtoken sequence."""

    _task = "summarization"

    def predict(self, X) -> List[List[int]]:
        X = self._checked(X)
        return training.predict(self.model_, X)

    def predict_names(self, X) -> List[List[str]]:
        X = self._checked(X)
        return [X.vocab.decode([t for t in ids if t != EOS_ID]) for ids in training.predict(self.model_, X)]
