import numpy as np
import pytest

from pointlink.rng import RandomSource
from pointlink.tensor import Tensor


def central_difference(f, arrays, eps=1e-5):
    """Numeric gradient oracle: central differences of scalar f(arrays) with
    respect to every entry of every array.  Evaluates f only; it never looks
    at the graph it is checking."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            hi = f()
            flat[i] = keep - eps
            lo = f()
            flat[i] = keep
            gflat[i] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-8):
    for a, n in zip(analytic, numeric):
        np.testing.assert_allclose(a, n, rtol=rtol, atol=atol)


def check_gradients(build_loss, params, rtol=1e-4, eps=1e-5, atol=1e-8):
    """Compare backward() gradients of build_loss() against the
    finite-difference oracle.  `params` are the Tensors to differentiate;
    build_loss must reconstruct the graph from their current .data."""
    loss = build_loss()
    for p in params:
        p.grad = None
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    numeric = central_difference(lambda: float(build_loss().data),
                                 [p.data for p in params], eps=eps)
    assert_grads_close(analytic, numeric, rtol=rtol, atol=atol)


@pytest.fixture
def source():
    return RandomSource(12345)


def rand_tensor(source, shape, lo=-1.0, hi=1.0, requires_grad=True):
    return Tensor(source.uniform(shape, lo, hi), requires_grad=requires_grad)


def jitter_biases(module, seed=777, scale=0.05):
    """Move zero-initialized biases off relu kinks so finite differences
    probe a smooth neighborhood (self-neighbor position differences are
    exactly zero, putting fresh models right on the kink)."""
    src = RandomSource(seed)
    for name, p in module.named_parameters():
        if name.endswith(".b"):
            p.data[...] = src.uniform(p.data.shape, -scale, scale)
