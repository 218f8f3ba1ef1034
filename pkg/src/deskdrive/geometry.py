"""Planar geometry helpers: angle wrapping, rigid transforms, polylines."""

from __future__ import annotations

import numpy as np


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    r = np.mod(np.asarray(a, dtype=float), 2.0 * np.pi)
    out = np.where(r > np.pi, r - 2.0 * np.pi, r)
    return float(out) if np.isscalar(a) or np.ndim(a) == 0 else out


def rot2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def to_frame(points: np.ndarray, origin, heading: float) -> np.ndarray:
    """World points -> frame anchored at `origin` with x along `heading`."""
    p = np.asarray(points, dtype=float) - np.asarray(origin, dtype=float)
    return p @ rot2d(-heading).T


def from_frame(points: np.ndarray, origin, heading: float) -> np.ndarray:
    """Inverse of :func:`to_frame`."""
    p = np.asarray(points, dtype=float) @ rot2d(heading).T
    return p + np.asarray(origin, dtype=float)


def cumulative_arclength(points: np.ndarray) -> np.ndarray:
    """Arclength at each vertex of a polyline, starting at 0."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def headings_from_xy(xy: np.ndarray, first: float = 0.0) -> np.ndarray:
    """Per-waypoint headings from segment directions.

    Waypoint 0 takes `first`; waypoint i>0 takes the direction of the
    incoming segment; near-stationary segments inherit the previous heading.
    """
    xy = np.asarray(xy, dtype=float)
    n = xy.shape[0]
    out = np.empty(n)
    out[0] = first
    for i in range(1, n):
        d = xy[i] - xy[i - 1]
        if np.hypot(d[0], d[1]) < 1e-9:
            out[i] = out[i - 1]
        else:
            out[i] = np.arctan2(d[1], d[0])
    return out


class Polyline:
    """Polyline with cached arclength; supports interpolation and projection."""

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise ValueError("polyline needs at least 2 points")
        self.arclength = cumulative_arclength(self.points)
        self.length = float(self.arclength[-1])
        self._seg = np.diff(self.points, axis=0)
        self._seg_len = np.linalg.norm(self._seg, axis=1)

    def point_at(self, s) -> np.ndarray:
        """Point at arclength s (clamped to [0, length]); vectorized."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        idx = np.clip(np.searchsorted(self.arclength, s, side="right") - 1, 0,
                      len(self._seg) - 1)
        t = (s - self.arclength[idx]) / np.maximum(self._seg_len[idx], 1e-12)
        t = np.clip(t, 0.0, 1.0)
        return self.points[idx] + self._seg[idx] * t[..., None]

    def heading_at(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        idx = np.clip(np.searchsorted(self.arclength, s, side="right") - 1, 0,
                      len(self._seg) - 1)
        return np.arctan2(self._seg[idx, 1], self._seg[idx, 0])

    def project(self, p) -> float:
        """Arclength of the closest polyline point to p."""
        p = np.asarray(p, dtype=float)
        rel = p - self.points[:-1]
        t = np.einsum("ij,ij->i", rel, self._seg) / np.maximum(self._seg_len**2, 1e-12)
        t = np.clip(t, 0.0, 1.0)
        foot = self.points[:-1] + self._seg * t[:, None]
        d2 = np.einsum("ij,ij->i", foot - p, foot - p)
        i = int(np.argmin(d2))
        return float(self.arclength[i] + t[i] * self._seg_len[i])

    def distance_to(self, pts: np.ndarray) -> np.ndarray:
        """Distance from each point in pts (M,2) to the polyline."""
        pts = np.asarray(pts, dtype=float)
        rel = pts[:, None, :] - self.points[None, :-1, :]
        t = np.einsum("mij,ij->mi", rel, self._seg) / np.maximum(self._seg_len**2, 1e-12)
        t = np.clip(t, 0.0, 1.0)
        foot = self.points[None, :-1, :] + self._seg[None, :, :] * t[:, :, None]
        d2 = np.sum((foot - pts[:, None, :]) ** 2, axis=2)
        return np.sqrt(d2.min(axis=1))

    def curvature_at(self, s, ds: float = 2.0) -> float:
        """Signed heading change per meter around arclength s."""
        h0 = float(self.heading_at(max(0.0, s - ds)))
        h1 = float(self.heading_at(min(self.length, s + ds)))
        span = min(self.length, s + ds) - max(0.0, s - ds)
        if span <= 1e-9:
            return 0.0
        return wrap_angle(h1 - h0) / span
