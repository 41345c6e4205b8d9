"""Named parameter store with paired gradient buffers and seeded init."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .tensor import Tensor


class ParamStore:
    """Ordered map of trainable parameters.

    Weights initialize uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in))
    with fan_in = rows; the RNG seed is recorded so initialization is
    reproducible.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._params: dict[str, Tensor] = {}

    def new(self, name: str, rows: int, cols: int, init: str = "fan_in") -> Tensor:
        if name in self._params:
            raise ShapeMismatch(f"duplicate parameter name {name!r}")
        if init == "fan_in":
            bound = 1.0 / np.sqrt(max(rows, 1))
            data = self._rng.uniform(-bound, bound, size=(rows, cols))
        elif init == "zeros":
            data = np.zeros((rows, cols))
        elif init == "ones":
            data = np.ones((rows, cols))
        else:
            raise ValueError(f"unknown init {init!r}")
        t = Tensor(data, requires_grad=True)
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

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def n_scalars(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def to_payload(self) -> dict:
        """JSON-safe snapshot; float values round-trip exactly via repr."""
        return {
            name: {"shape": list(t.shape), "data": [float(v) for v in t.data.ravel()]}
            for name, t in self._params.items()
        }

    @classmethod
    def from_payload(cls, payload: dict, seed: int = 0) -> "ParamStore":
        store = cls(seed=seed)
        for name, entry in payload.items():
            rows, cols = entry["shape"]
            data = np.asarray(entry["data"], dtype=np.float64).reshape(rows, cols)
            if not np.all(np.isfinite(data)):
                raise ShapeMismatch(f"parameter {name!r} has non-finite entries")
            t = Tensor(data, requires_grad=True)
            store._params[name] = t
        return store
