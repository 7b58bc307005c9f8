"""Parameters, modules, and the standard layers the pipeline uses."""

from __future__ import annotations

import numpy as np

from .rng import RandomSource
from .tensor import Tensor


class Parameter(Tensor):
    """A trainable tensor with a checkpoint name (unique within a model)."""

    __slots__ = ("name", "trainable")

    def __init__(self, data, name: str = "", trainable: bool = True):
        super().__init__(data, requires_grad=trainable)
        self.name = name
        self.trainable = trainable


class Module:
    """Container with recursive parameter discovery.

    Submodules and parameters are found by attribute walk; lists of modules
    are supported.  `named_parameters()` yields (dotted-path, Parameter) and
    enforces name uniqueness.
    """

    def named_parameters(self, prefix: str = ""):
        for key, val in vars(self).items():
            path = f"{prefix}{key}"
            if isinstance(val, Parameter):
                val.name = path
                yield path, val
            elif isinstance(val, Module):
                yield from val.named_parameters(prefix=f"{path}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{path}.{i}.")

    def parameters(self):
        seen = set()
        for name, p in self.named_parameters():
            if name in seen:
                raise ValueError(f"duplicate parameter name: {name}")
            seen.add(name)
            yield p

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_arrays(self) -> dict:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_arrays(self, state: dict):
        for name, p in self.named_parameters():
            if name not in state:
                raise KeyError(f"checkpoint is missing parameter {name}")
            arr = state[name]
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {arr.shape} vs {p.data.shape}")
            p.data[...] = arr


def _init_weight(fan_in: int, fan_out: int, source: RandomSource) -> np.ndarray:
    # uniform in +/- sqrt(1/fan_in); scale-stable at these widths
    bound = np.sqrt(1.0 / fan_in)
    return source.uniform((fan_in, fan_out), -bound, bound)


class Linear(Module):
    """Affine map x @ w + b for x of shape (..., in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, source: RandomSource,
                 bias: bool = True):
        if in_dim < 1 or out_dim < 1:
            raise ValueError("Linear dimensions must be positive")
        self.w = Parameter(_init_weight(in_dim, out_dim, source))
        self.b = Parameter(np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        x = Tensor._lift(x)
        if x.shape[-1] != self.w.shape[0]:
            raise ValueError(
                f"Linear expected last dim {self.w.shape[0]}, got {x.shape[-1]}")
        out = x @ self.w
        if self.b is not None:
            out = out + self.b
        return out


_ACTIVATIONS = {
    "relu": lambda t: t.relu(),
    "tanh": lambda t: t.tanh(),
    "none": lambda t: t,
}


class MLP(Module):
    """Stacked linear layers with an activation between them.

    `widths` lists the output size of each layer.  `activation` is applied
    after every hidden layer; `final` (default "none") after the last one,
    e.g. "tanh" for bounded offset heads.
    """

    def __init__(self, in_dim: int, widths: list[int], source: RandomSource,
                 activation: str = "relu", final: str = "none"):
        if not widths:
            raise ValueError("MLP needs at least one layer width")
        if activation not in _ACTIVATIONS or final not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}/{final!r}")
        self.layers = []
        d = in_dim
        for w in widths:
            self.layers.append(Linear(d, w, source))
            d = w
        self.activation = activation
        self.final = final

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            act = self.final if i == len(self.layers) - 1 else self.activation
            x = _ACTIVATIONS[act](x)
        return x
