"""Parameter containers and seeded initialization."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import DEFAULT_DTYPE, Parameter


class Module:
    """Holds named parameters in insertion order."""

    def __init__(self, seed: int = 0, dtype=DEFAULT_DTYPE):
        self.params: dict[str, Parameter] = {}
        self.rng = np.random.default_rng(seed)
        self.dtype = dtype

    def add_param(self, name: str, data, trainable: bool = True) -> Parameter:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        param = Parameter(name, np.asarray(data, dtype=self.dtype), trainable)
        self.params[name] = param
        return param

    def uniform(self, name: str, shape, fan_in: int | None = None) -> Parameter:
        """Uniform in +-1/sqrt(fan_in); fan_in defaults to the first dimension."""
        fan_in = fan_in or shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        return self.add_param(name, self.rng.uniform(-bound, bound, size=shape))

    def zeros(self, name: str, shape) -> Parameter:
        return self.add_param(name, np.zeros(shape))

    def ones(self, name: str, shape) -> Parameter:
        return self.add_param(name, np.ones(shape))

    def parameters(self) -> Iterator[Parameter]:
        return iter(self.params.values())

    def trainable(self) -> list[Parameter]:
        return [p for p in self.params.values() if p.trainable]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        extra = set(state) - set(self.params)
        if missing or extra:
            raise ValueError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for name, p in self.params.items():
            if state[name].shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: {state[name].shape} vs {p.shape}")
            p.data = np.array(state[name], dtype=p.dtype, copy=True)
