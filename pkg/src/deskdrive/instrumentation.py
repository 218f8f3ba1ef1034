"""Invocation counters proving the inference path never touches the denoiser."""

from __future__ import annotations

_COUNTS = {"denoiser": 0, "sampler": 0}


def bump(name: str) -> None:
    _COUNTS[name] += 1


def count(name: str) -> int:
    return _COUNTS[name]


def reset(name: str | None = None) -> None:
    if name is None:
        for k in _COUNTS:
            _COUNTS[k] = 0
    else:
        _COUNTS[name] = 0
