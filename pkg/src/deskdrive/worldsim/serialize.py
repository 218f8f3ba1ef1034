"""Scene (de)serialization: one JSON object per line, RLE-compressed grid."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import IOFailure
from ..geometry import Polyline
from .types import AgentState, EgoState, Scene, WorldParams


def _rle_encode(flat: np.ndarray) -> list:
    """[first_value, run_len_0, run_len_1, ...] over a flattened bool array."""
    arr = np.asarray(flat, dtype=np.uint8).ravel()
    if arr.size == 0:
        return [0]
    change = np.nonzero(np.diff(arr))[0] + 1
    bounds = np.concatenate([[0], change, [arr.size]])
    runs = np.diff(bounds).tolist()
    return [int(arr[0])] + [int(r) for r in runs]


def _rle_decode(encoded: list, size: int) -> np.ndarray:
    value = bool(encoded[0])
    out = np.empty(size, dtype=bool)
    pos = 0
    for run in encoded[1:]:
        out[pos:pos + run] = value
        pos += run
        value = not value
    return out


def scene_to_json(scene: Scene) -> str:
    doc = {
        "seed": scene.seed,
        "difficulty": scene.difficulty,
        "origin": list(scene.origin),
        "cell_size": scene.cell_size,
        "grid_shape": list(scene.drivable.shape),
        "grid_rle": _rle_encode(scene.drivable),
        "route": np.round(scene.route.points, 9).tolist(),
        "ego": {"position": list(scene.ego.position), "heading": scene.ego.heading,
                "speed": scene.ego.speed, "accel": scene.ego.accel,
                "command": scene.ego.command},
        "agents": [{"position": list(a.position), "velocity": list(a.velocity),
                    "radius": a.radius} for a in scene.agents],
        "params": asdict(scene.params),
    }
    return json.dumps(doc, sort_keys=True)


def scene_from_json(line: str) -> Scene:
    doc = json.loads(line)
    shape = tuple(doc["grid_shape"])
    grid = _rle_decode(doc["grid_rle"], shape[0] * shape[1]).reshape(shape)
    ego = EgoState(position=tuple(doc["ego"]["position"]),
                   heading=doc["ego"]["heading"], speed=doc["ego"]["speed"],
                   accel=doc["ego"]["accel"], command=doc["ego"]["command"])
    agents = [AgentState(position=tuple(a["position"]),
                         velocity=tuple(a["velocity"]), radius=a["radius"])
              for a in doc["agents"]]
    return Scene(drivable=grid, origin=tuple(doc["origin"]),
                 cell_size=doc["cell_size"],
                 route=Polyline(np.asarray(doc["route"], dtype=float)),
                 ego=ego, agents=agents, seed=doc["seed"],
                 difficulty=doc["difficulty"],
                 params=WorldParams(**doc["params"]))


def write_scenes_jsonl(scenes, path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            for scene in scenes:
                f.write(scene_to_json(scene) + "\n")
    except OSError as e:
        raise IOFailure(str(e)) from e


def read_scenes_jsonl(path) -> list[Scene]:
    try:
        with open(path) as f:
            return [scene_from_json(line) for line in f if line.strip()]
    except OSError as e:
        raise IOFailure(str(e)) from e
