"""Well-spread node sets on the periodic box.

A node set is kept with its gap (largest hole), the per-unit-cube count,
and a deterministic splitting into integer-parametrized layers: each node
is assigned to the cube floor(node), and nodes sharing a cube are ordered
lexicographically and dealt onto layers 1, 2, ... in that order. The layer
maps k -> node satisfy |node - k|_inf <= 1, and the layers partition the set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

GAP_PROBES_PER_AXIS = 2048


def _as_points(points, d=None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise InvalidInputError(f"points must be (n, d), got shape {pts.shape}")
    if d is not None and pts.shape[1] != d:
        raise InvalidInputError(f"points have dim {pts.shape[1]}, expected {d}")
    return pts


def periodic_diff(a: np.ndarray, b: np.ndarray, box: float) -> np.ndarray:
    """Componentwise difference a - b wrapped into [-box/2, box/2)."""
    return (a - b + box / 2.0) % box - box / 2.0


def gap(points, box: float) -> tuple:
    """Largest distance from any box point to its nearest node (periodic).

    Returns (gap, resolution). Exact in d=1 via sorted midpoints; probed on a
    grid of GAP_PROBES_PER_AXIS per axis in d=2, with the probe resolution
    reported so callers can fold it into tolerances.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise InvalidInputError("empty node set has no gap")
    d = pts.shape[1]
    if d == 1:
        xs = np.sort(pts[:, 0])
        spacings = np.diff(np.concatenate([xs, [xs[0] + box]]))
        return float(spacings.max() / 2.0), 0.0
    # d == 2: brute-force probe grid against all nodes, chunked
    n_prob = GAP_PROBES_PER_AXIS // 8  # 256 per axis keeps d=2 tractable
    ax = (np.arange(n_prob) + 0.5) * (box / n_prob) - box / 2.0
    res = (box / n_prob) * np.sqrt(d) / 2.0
    worst = 0.0
    for x0 in ax:
        probe = np.column_stack([np.full(n_prob, x0), ax])
        diff = periodic_diff(probe[:, None, :], pts[None, :, :], box)
        dist = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
        worst = max(worst, float(dist.max()))
    return worst, float(res)


def min_separation(points, box: float) -> float:
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 2:
        return np.inf
    diff = periodic_diff(pts[:, None, :], pts[None, :, :], box)
    dist = np.sqrt((diff ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


@dataclass(frozen=True)
class NodeSet:
    """Nodes with gap diagnostics and the canonical layer splitting."""

    points: np.ndarray          # (n, d), inside [-box/2, box/2)
    box: float
    gap: float
    gap_resolution: float
    max_per_cube: int
    layer_index: np.ndarray     # (n,) 1-based layer of each node
    cube_index: np.ndarray      # (n, d) integer cube floor(node)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    def layer(self, s: int) -> dict:
        """Layer s as a map cube-index tuple -> node row."""
        rows = np.nonzero(self.layer_index == s)[0]
        return {tuple(self.cube_index[i]): int(i) for i in rows}


def split(points, box: float) -> NodeSet:
    """Build a NodeSet with the deterministic floor+lexicographic splitting."""
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise InvalidInputError("cannot split an empty node set")
    half = box / 2.0
    if np.any(pts < -half) or np.any(pts >= half):
        pts = (pts + half) % box - half
    cubes = np.floor(pts).astype(int)
    order = np.lexsort(tuple(pts[:, c] for c in reversed(range(pts.shape[1]))))
    layer_index = np.zeros(pts.shape[0], dtype=int)
    seen: dict = {}
    for i in order:
        key = tuple(cubes[i])
        seen[key] = seen.get(key, 0) + 1
        layer_index[i] = seen[key]
    n_layers = int(layer_index.max())
    g, res = gap(pts, box)
    return NodeSet(
        points=pts,
        box=float(box),
        gap=g,
        gap_resolution=res,
        max_per_cube=n_layers,
        layer_index=layer_index,
        cube_index=cubes,
    )


def generate(kind: str, box: float, seed: int, d: int = 1, **params) -> np.ndarray:
    """Seeded node-set generators: 'lattice', 'jittered', 'poisson-thinned'."""
    rng = np.random.default_rng(seed)
    if kind == "lattice":
        spacing = float(params.get("spacing", 1.0))
        return _lattice(box, spacing, d)
    if kind == "jittered":
        spacing = float(params.get("spacing", 1.0))
        delta = float(params.get("delta", 0.2))
        if not 0 <= delta < 0.5 * spacing:
            raise InvalidInputError(f"jitter delta {delta} must be < spacing/2")
        base = _lattice(box, spacing, d)
        return base + rng.uniform(-delta, delta, size=base.shape)
    if kind == "poisson-thinned":
        r_min = float(params["r_min"])
        r_max = float(params["r_max"])
        if not 0 < r_min < r_max:
            raise InvalidInputError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
        return _poisson_thinned(box, r_min, r_max, d, rng)
    raise InvalidInputError(f"unknown generator kind {kind!r}")


def _lattice(box: float, spacing: float, d: int) -> np.ndarray:
    n = int(round(box / spacing))
    if abs(n * spacing - box) > 1e-9 * box:
        raise InvalidInputError(
            f"spacing {spacing} does not divide the box {box} evenly"
        )
    ax = -box / 2.0 + spacing * np.arange(n)
    if d == 1:
        return ax[:, None]
    g0, g1 = np.meshgrid(ax, ax, indexing="ij")
    return np.column_stack([g0.ravel(), g1.ravel()])


def _poisson_thinned(box, r_min, r_max, d, rng) -> np.ndarray:
    # Poisson sample, greedy thinning to r_min, then plug any hole > r_max.
    intensity = 3.0 / r_min ** d
    count = rng.poisson(intensity * box ** d)
    cand = rng.uniform(-box / 2.0, box / 2.0, size=(max(count, 1), d))
    kept: list = []
    for p in cand:
        if all(np.linalg.norm(periodic_diff(p, q, box)) >= r_min for q in kept):
            kept.append(p)
    # fill residual holes on a probe grid
    n_prob = max(8, int(np.ceil(box / (r_max / 4.0))))
    ax = (np.arange(n_prob) + 0.5) * (box / n_prob) - box / 2.0
    probes = ax[:, None] if d == 1 else np.column_stack(
        [g.ravel() for g in np.meshgrid(ax, ax, indexing="ij")]
    )
    changed = True
    while changed:
        changed = False
        pts = np.asarray(kept)
        diff = periodic_diff(probes[:, None, :], pts[None, :, :], box)
        dist = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
        i = int(np.argmax(dist))
        if dist[i] > r_max * 0.95:
            kept.append(probes[i])
            changed = True
    return np.asarray(kept)
