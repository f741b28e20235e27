"""Anisotropic Besov / Triebel-Lizorkin sequence and function norms.

Sequence norms weight coefficient magnitudes by indicators of the
parallelepipeds Q_{j,k} = A^j([0,1]^d + k). At a fixed scale those tiles
are disjoint, which makes the Besov norm a closed-form scale-by-scale
l^p sum for every d. The Triebel-Lizorkin norm mixes scales pointwise; in
d = 1 the integrand is piecewise constant on the arrangement of all active
interval endpoints and is integrated exactly, in d = 2 it is sampled at
midpoints of a raster twice finer than the smallest cube edge.

Node-indexed coefficients are measured by splitting the node set into its
canonical layers and summing the Z^d norms of the per-layer grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dilations import ExpansiveDilation
from .errors import InvalidInputError
from .frames import CoefficientGrid, FrameSystem
from .grids import SampledSignal
from .windows import SpectralWindow

RASTER_LIMIT = 4_000_000


@dataclass(frozen=True)
class SpaceParams:
    """(family, alpha, p, q) selecting one space of the scale."""

    family: str
    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if self.family not in ("B", "F"):
            raise InvalidInputError(f"family must be 'B' or 'F', got {self.family!r}")
        if not self.p > 0 or not self.q > 0:
            raise InvalidInputError("p and q must be positive (inf allowed)")


def _weight(dil: ExpansiveDilation, j: int, alpha: float) -> float:
    """|det A|^{-j (alpha + 1/2)}; enters raised to the q-th power."""
    return dil.det_abs ** (-j * (alpha + 0.5))


# ---------------------------------------------------------------------------
# Z^d sequence grids


def as_zgrid(entries) -> dict:
    """Normalize {j: {k-tuple: value}} input; scalar k becomes a 1-tuple."""
    grid = {}
    for j, row in entries.items():
        out = {}
        for k, v in row.items():
            key = (int(k),) if np.isscalar(k) else tuple(int(x) for x in k)
            out[key] = complex(v)
        if out:
            grid[int(j)] = out
    return grid


def besov_seq_norm(entries, dil: ExpansiveDilation, sp: SpaceParams) -> float:
    """Exact evaluation: same-scale tiles are disjoint, so the inner L^p
    norm is (|det A|^j sum_k |a_jk|^p)^{1/p}."""
    if sp.family != "B":
        raise InvalidInputError("besov_seq_norm expects family 'B'")
    grid = as_zgrid(entries)
    if not grid:
        return 0.0
    terms = []
    for j, row in grid.items():
        mags = np.abs(np.array(list(row.values())))
        if sp.p == np.inf:
            inner = float(mags.max())
        else:
            inner = float(
                (dil.det_power(j) * np.sum(mags ** sp.p)) ** (1.0 / sp.p)
            )
        terms.append(_weight(dil, j, sp.alpha) * inner)
    terms = np.array(terms)
    if sp.q == np.inf:
        return float(terms.max())
    return float((np.sum(terms ** sp.q)) ** (1.0 / sp.q))


def _interval(dil: ExpansiveDilation, j: int, k: int):
    a = dil.power(j)[0, 0]
    lo, hi = sorted((a * k, a * (k + 1)))
    return lo, hi


def _triebel_integrand_1d(grid, dil, sp, xs):
    """Values of (sum_j w_j^q sum_k |a|^q chi)^{1/q} at sample points xs."""
    acc = np.zeros(xs.size)
    sup = np.zeros(xs.size)
    for j, row in grid.items():
        a = dil.power(j)[0, 0]
        local = xs / a
        ks = np.floor(local).astype(int)
        vals = np.zeros(xs.size)
        for idx, k in enumerate(ks):
            v = row.get((int(k),))
            if v is not None:
                vals[idx] = abs(v)
        w = _weight(dil, j, sp.alpha)
        if sp.q == np.inf:
            sup = np.maximum(sup, w * vals)
        else:
            acc += (w * vals) ** sp.q
    return sup if sp.q == np.inf else acc ** (1.0 / sp.q)


def _breakpoints_1d(grid, dil):
    pts = set()
    for j, row in grid.items():
        for (k,) in row:
            lo, hi = _interval(dil, j, k)
            pts.add(lo)
            pts.add(hi)
    return np.array(sorted(pts))


def triebel_seq_norm(entries, dil: ExpansiveDilation, sp: SpaceParams) -> float:
    if sp.family != "F":
        raise InvalidInputError("triebel_seq_norm expects family 'F'")
    grid = as_zgrid(entries)
    if not grid:
        return 0.0
    d = dil.d
    if sp.p == np.inf:
        return _triebel_seq_norm_pinf(grid, dil, sp)
    if d == 1:
        bp = _breakpoints_1d(grid, dil)
        mids = 0.5 * (bp[1:] + bp[:-1])
        lens = np.diff(bp)
        g = _triebel_integrand_1d(grid, dil, sp, mids)
        return float((np.sum(lens * g ** sp.p)) ** (1.0 / sp.p))
    # d == 2: midpoint raster at half the smallest cube edge
    xs, cell = _raster_2d(grid, dil)
    g = _triebel_integrand_2d(grid, dil, sp, xs)
    return float((np.sum(cell * g ** sp.p)) ** (1.0 / sp.p))


def _raster_2d(grid, dil):
    corners = []
    for j, row in grid.items():
        aj = dil.power(j)
        base = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        for k in row:
            corners.append((base + np.asarray(k, dtype=float)) @ aj.T)
    corners = np.concatenate(corners)
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    edge = min(
        float(np.linalg.svd(dil.power(j), compute_uv=False)[-1])
        for j in grid
    )
    step = edge / 2.0
    counts = np.maximum(((hi - lo) / step).astype(int) + 1, 2)
    while counts[0] * counts[1] > RASTER_LIMIT:
        step *= 1.5
        counts = np.maximum(((hi - lo) / step).astype(int) + 1, 2)
    ax0 = lo[0] + (np.arange(counts[0]) + 0.5) * step
    ax1 = lo[1] + (np.arange(counts[1]) + 0.5) * step
    g0, g1 = np.meshgrid(ax0, ax1, indexing="ij")
    return np.column_stack([g0.ravel(), g1.ravel()]), step ** 2


def _triebel_integrand_2d(grid, dil, sp, xs):
    acc = np.zeros(xs.shape[0])
    sup = np.zeros(xs.shape[0])
    for j, row in grid.items():
        local = xs @ dil.power(-j).T
        ks = np.floor(local).astype(int)
        vals = np.zeros(xs.shape[0])
        keys = {k: abs(v) for k, v in row.items()}
        for idx in range(xs.shape[0]):
            v = keys.get((ks[idx, 0], ks[idx, 1]))
            if v is not None:
                vals[idx] = v
        w = _weight(dil, j, sp.alpha)
        if sp.q == np.inf:
            sup = np.maximum(sup, w * vals)
        else:
            acc += (w * vals) ** sp.q
    return sup if sp.q == np.inf else acc ** (1.0 / sp.q)


def _triebel_seq_norm_pinf(grid, dil, sp) -> float:
    """p = inf: sup over anisotropic cubes of the averaged inner sum."""
    if sp.q == np.inf:
        best = 0.0
        for j, row in grid.items():
            w = _weight(dil, j, sp.alpha)
            for v in row.values():
                best = max(best, w * abs(v))
        return float(best)
    if dil.d != 1:
        raise InvalidInputError("p = inf Triebel norms are implemented for d = 1")
    scales = sorted(grid)
    best = 0.0
    for s in scales:
        # candidate cubes at scale s that meet the support
        cand = set()
        a_s = dil.power(s)[0, 0]
        for j, row in grid.items():
            if j > s:
                continue
            for (k,) in row:
                lo, hi = _interval(dil, j, k)
                for edge in (lo, hi):
                    cand.add(int(np.floor(edge / a_s)))
                cand.add(int(np.floor(0.5 * (lo + hi) / a_s)))
        for m in cand:
            clo, chi = _interval(dil, s, m)
            sub = {j: row for j, row in grid.items() if j <= s}
            if not sub:
                continue
            bp = _breakpoints_1d(sub, dil)
            bp = np.unique(np.clip(bp, clo, chi))
            bp = np.concatenate([[clo], bp, [chi]])
            bp = np.unique(bp)
            mids = 0.5 * (bp[1:] + bp[:-1])
            lens = np.diff(bp)
            acc = np.zeros(mids.size)
            for j, row in sub.items():
                a = dil.power(j)[0, 0]
                ks = np.floor(mids / a).astype(int)
                vals = np.array([abs(row.get((int(k),), 0.0)) for k in ks])
                acc += (_weight(dil, j, sp.alpha) * vals) ** sp.q
            avg = np.sum(lens * acc) / (chi - clo)
            best = max(best, avg ** (1.0 / sp.q))
    return float(best)


def seq_norm(entries, dil: ExpansiveDilation, sp: SpaceParams) -> float:
    if sp.family == "B":
        return besov_seq_norm(entries, dil, sp)
    return triebel_seq_norm(entries, dil, sp)


# ---------------------------------------------------------------------------
# Node-indexed coefficients


def lambda_seq_norm(coeffs: CoefficientGrid, sp: SpaceParams) -> float:
    """Sum of per-layer Z^d norms of the split coefficient grids.

    Box-period copies reuse their principal node's layer; with an integer
    box their cubes are disjoint from the principal ones, so the layer
    parametrization stays injective.
    """
    nodes = coeffs.nodes
    dil = coeffs.dil
    if abs(coeffs.box - round(coeffs.box)) > 1e-12:
        raise InvalidInputError("copy-extended node norms need an integer box")
    total = 0.0
    for s in range(1, nodes.max_per_cube + 1):
        rows = np.nonzero(nodes.layer_index == s)[0]
        if rows.size == 0:
            continue
        grid: dict = {}
        for j, arr in coeffs.entries.items():
            n_copies = arr.shape[0]
            row: dict = {}
            for mu in range(n_copies):
                shift = _copy_shift(coeffs, j, mu)
                for i in rows:
                    v = arr[mu, i]
                    if v != 0:
                        cell = tuple(
                            int(np.floor(nodes.points[i, c] + shift[c]))
                            for c in range(nodes.d)
                        )
                        if cell in row:
                            raise InvalidInputError(
                                f"layer {s} cube {cell} hit twice at scale {j}"
                            )
                        row[cell] = v
            if row:
                grid[j] = row
        if grid:
            total += seq_norm(grid, dil, sp)
    return float(total)


def _copy_shift(coeffs: CoefficientGrid, j: int, mu: int) -> np.ndarray:
    from .frames import copy_shifts

    return copy_shifts(coeffs.dil, coeffs.box, j)[mu]


# ---------------------------------------------------------------------------
# Littlewood-Paley function norms


def lp_function_norm(
    f: SampledSignal,
    analyzer: SpectralWindow,
    dil: ExpansiveDilation,
    sp: SpaceParams,
    spec_floor: float = 1e-13,
) -> float:
    """Norm of f from its per-scale band-pass magnitudes |f * D_{A^j} phi|.

    Convolutions are exact in frequency; scales are truncated to those whose
    dilated analyzer support meets the nonzero part of the spectrum.
    """
    spec = f.spectrum()
    flat = spec.reshape(-1)
    w = _grid_points(f)
    active = np.abs(flat) > spec_floor * max(1.0, float(np.abs(flat).max()))
    if not np.any(active):
        return 0.0
    convs = {}
    for j in range(-dil.max_scale, dil.max_scale + 1):
        prof = analyzer.profile(w @ dil.t_power(j).T)
        if not np.any((prof != 0) & active):
            continue
        amp = dil.det_power(j) ** 0.5 * prof
        conv = SampledSignal.from_spectrum(
            (flat * amp).reshape(spec.shape), f.box_size
        )
        convs[j] = conv.values.reshape(-1)
    if not convs:
        return 0.0
    cell = f.cell_volume()
    if sp.family == "B":
        terms = []
        for j, v in convs.items():
            if sp.p == np.inf:
                inner = float(np.abs(v).max())
            else:
                inner = float((np.sum(np.abs(v) ** sp.p) * cell) ** (1.0 / sp.p))
            terms.append(_weight(dil, j, sp.alpha) * inner)
        terms = np.array(terms)
        if sp.q == np.inf:
            return float(terms.max())
        return float(np.sum(terms ** sp.q) ** (1.0 / sp.q))
    # F family
    if sp.p == np.inf:
        return _lp_function_norm_pinf(f, convs, dil, sp)
    if sp.q == np.inf:
        g = np.zeros(flat.size)
        for j, v in convs.items():
            g = np.maximum(g, _weight(dil, j, sp.alpha) * np.abs(v))
    else:
        g = np.zeros(flat.size)
        for j, v in convs.items():
            g += (_weight(dil, j, sp.alpha) * np.abs(v)) ** sp.q
        g = g ** (1.0 / sp.q)
    return float((np.sum(g ** sp.p) * cell) ** (1.0 / sp.p))


def _grid_points(f: SampledSignal) -> np.ndarray:
    from .grids import freq_points

    return freq_points(f.grid_n, f.box_size, f.d)


def _lp_function_norm_pinf(f, convs, dil, sp) -> float:
    if sp.q == np.inf:
        best = 0.0
        for j, v in convs.items():
            best = max(best, _weight(dil, j, sp.alpha) * float(np.abs(v).max()))
        return float(best)
    if f.d != 1:
        raise InvalidInputError("p = inf function norms are implemented for d = 1")
    from .grids import space_axis

    xs = space_axis(f.grid_n, f.box_size)
    cell = f.cell_volume()
    scales = sorted(convs)
    best = 0.0
    for s in scales:
        a_s = dil.power(s)[0, 0]
        length = abs(a_s)
        m_lo = int(np.floor(xs[0] / a_s))
        m_hi = int(np.floor(xs[-1] / a_s))
        for m in range(min(m_lo, m_hi), max(m_lo, m_hi) + 1):
            lo, hi = sorted((a_s * m, a_s * (m + 1)))
            inside = (xs >= lo) & (xs < hi)
            if not np.any(inside):
                continue
            acc = np.zeros(int(inside.sum()))
            for j in scales:
                if j > s:
                    continue
                acc += (
                    _weight(dil, j, sp.alpha) * np.abs(convs[j][inside])
                ) ** sp.q
            avg = float(np.sum(acc) * cell / length)
            best = max(best, avg ** (1.0 / sp.q))
    return float(best)


def analysis_coefficient_norm(
    f: SampledSignal, sys: FrameSystem, sp: SpaceParams
) -> float:
    """lambda_seq_norm of the frame analysis coefficients of f."""
    from .frames import analyze

    return lambda_seq_norm(analyze(f, sys), sp)
