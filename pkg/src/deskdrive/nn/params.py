"""Named parameter storage, optimizer state, and checkpoint files.

Checkpoint = one flat little-endian binary file plus a JSON manifest
mapping each name to shape, dtype, and byte offset, with the optimizer
step count.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import IOFailure, ShapeMismatch
from .tensor import Tensor


class ParamStore:
    """Uniquely named parameter arrays with Adam moments.

    `tensor(name)` returns a cached differentiable Tensor wrapping the
    live array, so gradients from repeated use within one graph
    accumulate in one place. `const(name)` returns a cached
    non-differentiable view (stop-gradient / frozen use).
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, np.ndarray] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0
        self._grad_cache: dict[str, Tensor] = {}
        self._const_cache: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        arr = np.ascontiguousarray(value, dtype=self.dtype)
        self._params[name] = arr
        self._m[name] = np.zeros_like(arr)
        self._v[name] = np.zeros_like(arr)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def names(self) -> list[str]:
        return sorted(self._params)

    def tensor(self, name: str) -> Tensor:
        t = self._grad_cache.get(name)
        if t is None or t.data is not self._params[name]:
            t = Tensor(self._params[name], requires_grad=True)
            self._grad_cache[name] = t
        return t

    def const(self, name: str) -> Tensor:
        t = self._const_cache.get(name)
        if t is None or t.data is not self._params[name]:
            t = Tensor(self._params[name], requires_grad=False)
            self._const_cache[name] = t
        return t

    def zero_grad(self) -> None:
        for t in self._grad_cache.values():
            t.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        """Collected gradients for parameters touched since zero_grad."""
        return {n: t.grad for n, t in self._grad_cache.items() if t.grad is not None}

    def set_from(self, other: "ParamStore", names=None, prefix_map=None) -> None:
        """Copy parameter values from another store (shape-checked)."""
        for name in (names if names is not None else other.names()):
            target = name if prefix_map is None else prefix_map(name)
            if target is None or target not in self._params:
                continue
            if self._params[target].shape != other[name].shape:
                raise ShapeMismatch(f"{name}: {other[name].shape} vs {self._params[target].shape}")
            self._params[target][...] = other[name].astype(self.dtype)

    def state_bytes(self) -> bytes:
        chunks = []
        for name in self.names():
            chunks.append(np.ascontiguousarray(self._params[name], dtype="<f8").tobytes())
        return b"".join(chunks)


def save_checkpoint(store: ParamStore, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {"dtype": str(store.dtype), "step_count": store.step_count, "params": {}}
    offset = 0
    blobs = []
    for name in store.names():
        arr = np.ascontiguousarray(store[name])
        raw = arr.astype(arr.dtype.newbyteorder("<")).tobytes()
        manifest["params"][name] = {
            "shape": list(arr.shape),
            "dtype": str(arr.dtype),
            "offset": offset,
        }
        offset += len(raw)
        blobs.append(raw)
    try:
        with open(str(path) + ".bin", "wb") as f:
            f.write(b"".join(blobs))
        with open(str(path) + ".json", "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
    except OSError as e:
        raise IOFailure(str(e)) from e


def load_checkpoint(path, store: ParamStore | None = None) -> ParamStore:
    path = Path(path)
    try:
        with open(str(path) + ".json") as f:
            manifest = json.load(f)
        raw = Path(str(path) + ".bin").read_bytes()
    except OSError as e:
        raise IOFailure(str(e)) from e
    out = store if store is not None else ParamStore(dtype=np.dtype(manifest["dtype"]))
    for name, meta in manifest["params"].items():
        dt = np.dtype(meta["dtype"]).newbyteorder("<")
        n = int(np.prod(meta["shape"])) if meta["shape"] else 1
        arr = np.frombuffer(raw, dtype=dt, count=n, offset=meta["offset"])
        arr = arr.reshape(meta["shape"]).astype(out.dtype)
        if name in out:
            if out[name].shape != arr.shape:
                raise ShapeMismatch(f"{name}: file {arr.shape} vs store {out[name].shape}")
            out[name][...] = arr
        else:
            out.add(name, arr)
    out.step_count = int(manifest["step_count"])
    return out


def checkpoint_hash(path) -> str:
    """Content hash over the binary blob and manifest of a checkpoint."""
    h = hashlib.sha256()
    h.update(Path(str(path) + ".bin").read_bytes())
    h.update(Path(str(path) + ".json").read_bytes())
    return h.hexdigest()
