import pytest
import torch

from gradcases import CASES, build
from oracles import gradient_error


@pytest.mark.parametrize("name", sorted(CASES))
@pytest.mark.parametrize("seed", [0, 1])
def test_autograd_matches_central_differences(name, seed):
    fn, tensors = build(name, seed)
    assert all(t.dtype == torch.float64 for t in tensors)
    assert gradient_error(fn, tensors) < 1e-4


def test_checker_catches_a_wrong_gradient():
    x = torch.tensor([0.3, -1.2], dtype=torch.float64, requires_grad=True)

    class Wrong(torch.autograd.Function):
        @staticmethod
        def forward(ctx, t):
            return (t ** 2).sum()

        @staticmethod
        def backward(ctx, g):
            return g * torch.ones(2, dtype=torch.float64)

    assert gradient_error(lambda: Wrong.apply(x), [x]) > 0.5


def test_meta_gradient_reaches_every_generator():
    fn, tensors = build("meta_gamma")
    grads = torch.autograd.grad(fn(), tensors, allow_unused=True)
    assert all(g is not None and g.abs().sum() > 0 for g in grads)
