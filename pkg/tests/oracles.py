"""Independent reference implementations used to check the batched code.

Everything here is written with plain loops over numpy float64 arrays so it
shares no code path with the library.
"""
import math

import numpy as np
import torch


def softmax(v):
    v = np.asarray(v, dtype=np.float64)
    e = np.exp(v - v.max())
    return e / e.sum()


def naive_path_attention(X, W, heads, R=None, A=None, pad=None):
    """Double-loop path-biased attention for one sequence.

    X (n, d), R (n, n, d) or None, A (n, d) or None, W dict of (d, d).
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    dh = d // heads
    Wn = {k: np.asarray(v, dtype=np.float64) for k, v in W.items()}
    pad = np.zeros(n, dtype=bool) if pad is None else np.asarray(pad)
    Z = np.zeros((n, d))
    for h in range(heads):
        sl = slice(h * dh, (h + 1) * dh)
        for i in range(n):
            q = (X[i] @ Wn["Q"])[sl]
            scores = np.full(n, -np.inf)
            for j in range(n):
                if pad[j]:
                    continue
                k = (X[j] @ Wn["K"])[sl]
                s = 0.0
                for e in range(dh):
                    rk = 0.0 if R is None else (R[i, j] @ Wn["rK"])[sl][e]
                    s += q[e] * (k[e] + rk)
                s /= math.sqrt(dh)
                if A is not None:
                    aq = (A[i] @ Wn["aQ"])[sl]
                    ak = (A[j] @ Wn["aK"])[sl]
                    s += sum(aq[e] * ak[e] for e in range(dh)) / math.sqrt(dh)
                scores[j] = s
            p = softmax(scores)
            for j in range(n):
                if pad[j]:
                    continue
                v = (X[j] @ Wn["V"])[sl]
                rv = np.zeros(dh) if R is None else (R[i, j] @ Wn["rV"])[sl]
                Z[i, sl] += p[j] * (v + rv)
    return Z


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def gru_scalar_run(xs, w_ih, w_hh, b_ih, b_hh):
    """Scalar GRU (input and hidden size 1) over ``xs``.

    Gate order in the weight triples is (reset, update, new).
    """
    h = 0.0
    for x in xs:
        r = sigmoid(w_ih[0] * x + b_ih[0] + w_hh[0] * h + b_hh[0])
        z = sigmoid(w_ih[1] * x + b_ih[1] + w_hh[1] * h + b_hh[1])
        n = math.tanh(w_ih[2] * x + b_ih[2] + r * (w_hh[2] * h + b_hh[2]))
        h = (1 - z) * n + z * h
    return h


def resample_indices(n, max_len):
    """Hand oracle for equal-interval sampling: integer division, no floats."""
    if n <= max_len:
        return list(range(n))
    return [k * n // max_len for k in range(max_len)]


def finite_difference(fn, tensors, eps=1e-6):
    """Central-difference gradients of scalar ``fn()`` with respect to each tensor (float64)."""
    grads = []
    for t in tensors:
        g = torch.zeros_like(t)
        flat, gflat = t.data.view(-1), g.view(-1)
        for idx in range(flat.numel()):
            old = flat[idx].item()
            flat[idx] = old + eps
            up = float(fn())
            flat[idx] = old - eps
            down = float(fn())
            flat[idx] = old
            gflat[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def gradient_error(fn, tensors, eps=1e-6):
    """Largest relative error between autograd and central differences over ``tensors``.

    Relative error per tensor is ``max|a - n| / max(max|a|, max|n|, 1e-12)``.
    """
    for t in tensors:
        t.grad = None
    out = fn()
    analytic = torch.autograd.grad(out, tensors, allow_unused=True)
    analytic = [torch.zeros_like(t) if a is None else a for a, t in zip(analytic, tensors)]
    with torch.no_grad():
        numeric = finite_difference(fn, tensors, eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(a.abs().max().item(), n.abs().max().item(), 1e-12)
        worst = max(worst, (a - n).abs().max().item() / scale)
    return worst


def naive_prf(pred, gold):
    """Multiset overlap by repeated removal."""
    remaining = list(gold)
    tp = 0
    for t in pred:
        if t in remaining:
            remaining.remove(t)
            tp += 1
    p = tp / len(pred) if pred else 0.0
    r = tp / len(gold) if gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f
