"""Named store of learnable arrays with gradient slots."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, parameter


class ParameterStore:
    """Insertion-ordered mapping of parameter name to leaf tensor.

    Weight matrices are initialized uniformly in +-sqrt(1/fan_in), biases
    and explicitly zero-initialized entries at zero. Matrices registered
    with ``zero_diag=True`` start with an exactly zero diagonal; the
    forward pass is responsible for masking so the diagonal never receives
    gradient and stays zero through any number of optimizer steps.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}

    def add_weight(self, name: str, shape: tuple, rng: np.random.Generator,
                   fan_in: int | None = None, zero_diag: bool = False) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter '{name}' already registered")
        fan = fan_in if fan_in is not None else shape[0]
        bound = np.sqrt(1.0 / fan)
        data = rng.uniform(-bound, bound, size=shape).astype(self.dtype)
        if zero_diag:
            if len(shape) != 2 or shape[0] != shape[1]:
                raise ValueError(f"zero_diag needs a square matrix, got {shape}")
            np.fill_diagonal(data, 0.0)
        t = parameter(data, dtype=self.dtype)
        self._params[name] = t
        return t

    def add_zeros(self, name: str, shape: tuple) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter '{name}' already registered")
        t = parameter(np.zeros(shape, dtype=self.dtype), dtype=self.dtype)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self, prefix: str = "") -> list[Tensor]:
        return [t for n, t in self._params.items() if n.startswith(prefix)]

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def n_entries(self) -> int:
        return sum(t.size for t in self._params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        if missing:
            raise KeyError(f"missing parameters in state: {sorted(missing)}")
        for name, t in self._params.items():
            src = np.asarray(arrays[name])
            if src.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for '{name}': stored {src.shape}, expected {t.data.shape}")
            t.data = src.astype(self.dtype)
            t.zero_grad()
