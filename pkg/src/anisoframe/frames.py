"""Analysis, synthesis, reconstruction, and frame bounds for irregular systems.

Atoms are D_{A^j} T_lambda psi evaluated spectrally on the periodic grid.
Periodization folds the translation positions A^j lambda at fine scales:
for j < 0 each node contributes |det A|^{|j|} genuinely distinct atoms (the
box-period copies lambda + T m), while for j > 0 the node-frame balayage
table covers each folded lattice class |det A|^j times, so the dual-side
class sum carries a 1/|det A|^j average. With those two bookkeeping rules
the lattice expansion and its node-side regrouping are exact identities on
the grid, and reconstruction errors reduce to the balayage residuals.

Requires an integer dilation matrix; the box folding is exact only then.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .balayage import BallSpec, BalayageTable, lattice_balayage_table
from .dilations import ExpansiveDilation
from .errors import AliasingError, InvalidInputError
from .grids import SampledSignal, freq_points
from .nodes import NodeSet
from .windows import (
    SpectralWindow,
    calderon_dual,
    choose_lattice_width,
)


def copy_shifts(dil: ExpansiveDilation, box: float, j: int) -> np.ndarray:
    """Box-period copy vectors at scale j: T * (transversal of Z^d / A^{|j|}Z^d).

    One zero vector for j >= 0; |det A|^{|j|} vectors for j < 0.
    """
    d = dil.d
    if j >= 0:
        return np.zeros((1, d))
    if not dil.is_integer:
        raise InvalidInputError("fine-scale copies need an integer dilation matrix")
    m = np.linalg.matrix_power(dil.entries.astype(int), -j)
    count = int(round(abs(np.linalg.det(m))))
    if d == 1:
        reps = np.arange(count)[:, None]
    else:
        # integer points of m [0,1)^d found by scanning its bounding box
        corners = np.array(list(product((0.0, 1.0), repeat=d))) @ m.T
        lo = np.floor(corners.min(axis=0)).astype(int)
        hi = np.ceil(corners.max(axis=0)).astype(int)
        minv = np.linalg.inv(m)
        cand = np.array(
            [p for p in product(*[range(lo[i], hi[i] + 1) for i in range(d)])]
        )
        local = cand @ minv.T
        inside = np.all((local > -1e-12) & (local < 1.0 - 1e-12), axis=1)
        reps = cand[inside]
        if reps.shape[0] != count:
            raise InvalidInputError(
                f"transversal enumeration found {reps.shape[0]} of {count} classes"
            )
    return box * reps.astype(float)


@dataclass
class FrameSystem:
    """An irregular painless frame with its balayage dual data."""

    psi: SpectralWindow
    tau: SpectralWindow
    dil: ExpansiveDilation
    nodes: NodeSet
    j_range: tuple
    b: float
    grid_n: int
    box: float
    table: BalayageTable
    lattice_exact: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def scales(self):
        return range(self.j_range[0], self.j_range[1] + 1)

    @property
    def d(self) -> int:
        return self.dil.d

    # -- per-scale cached machinery ------------------------------------

    def scale_info(self, j: int) -> dict:
        if j in self._cache:
            return self._cache[j]
        w = freq_points(self.grid_n, self.box, self.d)
        u = w @ self.dil.t_power(j).T
        psi_u = self.psi.profile(u)
        mask = psi_u != 0
        u = u[mask]
        det_half = self.dil.det_power(j) ** 0.5
        shifts = copy_shifts(self.dil, self.box, j)
        positions = (
            self.nodes.points[None, :, :] + shifts[:, None, :]
        ).reshape(-1, self.d)
        # primal atom rows: det^{j/2} e^{-2pi i pos.u} psi(u)
        phases = np.exp(-2j * np.pi * (positions @ u.T))
        atoms = det_half * phases * psi_u[mask][None, :]
        # dual rows: det^{j/2} tau(u) Gtilde_i(u) e^{-2pi i (T m).u} / det^{max(j,0)}
        g = self._node_factor(u)
        tau_u = self.tau.profile(u)
        shift_phase = np.exp(-2j * np.pi * (shifts @ u.T))
        dual = np.repeat(shift_phase, self.nodes.n_nodes, axis=0) * np.tile(
            g, (shifts.shape[0], 1)
        )
        dual = det_half * dual * tau_u[None, :]
        if j > 0:
            dual = dual / self.dil.det_power(j)
        info = {
            "mask": mask,
            "u": u,
            "atoms": atoms,
            "duals": dual,
            "n_copies": shifts.shape[0],
            "shifts": shifts,
            "positions": positions,
        }
        self._cache[j] = info
        return info

    def _node_factor(self, u: np.ndarray) -> np.ndarray:
        """Gtilde: rows are the node-frame lattice combinations at u."""
        n = self.nodes.n_nodes
        g = np.zeros((n, u.shape[0]), dtype=complex)
        for i in range(n):
            kk, cc = self.table.node_pairs(i)
            phases = np.exp(-2j * np.pi * np.outer(kk / self.b, u[:, 0]))
            g[i] = np.conj(cc) @ phases
        return g

    def covered_band_mask(self, margin: int = 8) -> np.ndarray:
        """Grid frequencies whose every active scale lies inside j_range."""
        w = freq_points(self.grid_n, self.box, self.d)
        jmin, jmax = self.j_range
        lo = min(jmin - margin, -self.dil.max_scale)
        hi = max(jmax + margin, self.dil.max_scale)
        any_active = np.zeros(w.shape[0], dtype=bool)
        outside = np.zeros(w.shape[0], dtype=bool)
        for j in range(lo, hi + 1):
            act = self.psi.profile(w @ self.dil.t_power(j).T) != 0
            any_active |= act
            if not jmin <= j <= jmax:
                outside |= act
        flat = any_active & ~outside
        if self.d == 1:
            return flat
        return flat.reshape(self.grid_n, self.grid_n)


def build_frame_system(
    psi: SpectralWindow,
    dil: ExpansiveDilation,
    nodes: NodeSet,
    j_range: tuple,
    grid_n: int,
    box: float,
    b: float | None = None,
    b_factor: float = 1.05,
    tol: float = 1e-8,
    r_trunc: float = 12.0,
) -> FrameSystem:
    """Assemble window, Calderon dual, balayage table, and caches."""
    if not dil.is_integer:
        raise InvalidInputError(
            "frame systems on the periodic grid need an integer dilation matrix"
        )
    jmin, jmax = int(j_range[0]), int(j_range[1])
    exact = True
    if b is None:
        b, exact = choose_lattice_width(
            psi, factor=b_factor, grid_box=box, j_max=jmax, dil=dil
        )
    tau = calderon_dual(psi, dil, b)
    ball = BallSpec.of(psi.ball_center, psi.ball_radius)
    table = lattice_balayage_table(
        nodes, b, ball, tol=tol, r_trunc=r_trunc
    )
    sys = FrameSystem(
        psi=psi, tau=tau, dil=dil, nodes=nodes, j_range=(jmin, jmax),
        b=b, grid_n=grid_n, box=box, table=table, lattice_exact=exact,
    )
    _check_grid_coverage(sys)
    return sys


def _check_grid_coverage(sys: FrameSystem):
    """Every scale's dilated window support must fit inside the grid band."""
    nyq = sys.grid_n / (2.0 * sys.box)
    for j in sys.scales:
        # support of psi((A^t)^j w) reaches out to (A^t)^{-j} ball
        reach = np.linalg.norm(sys.dil.t_power(-j), 2) * sys.psi.ball_radius
        if reach > nyq:
            raise AliasingError(
                reach, f"scale {j} support exceeds the Nyquist frequency {nyq}"
            )


@dataclass
class CoefficientGrid:
    """Coefficients indexed by scale, box-period copy, and node."""

    entries: dict                  # j -> complex array (n_copies, n_nodes)
    j_range: tuple
    nodes: NodeSet
    dil: ExpansiveDilation
    box: float
    out_of_band: float = 0.0

    def flat(self, j: int) -> np.ndarray:
        return self.entries[j].reshape(-1)

    def total_energy(self) -> float:
        return float(sum(np.sum(np.abs(v) ** 2) for v in self.entries.values()))

    def copy_positions(self, j: int, shifts: np.ndarray) -> np.ndarray:
        return (
            self.nodes.points[None, :, :] + shifts[:, None, :]
        ).reshape(-1, self.nodes.d)

    def __add__(self, other: "CoefficientGrid") -> "CoefficientGrid":
        ent = {j: self.entries[j] + other.entries[j] for j in self.entries}
        return CoefficientGrid(ent, self.j_range, self.nodes, self.dil, self.box)

    def scaled(self, t: complex) -> "CoefficientGrid":
        ent = {j: t * self.entries[j] for j in self.entries}
        return CoefficientGrid(ent, self.j_range, self.nodes, self.dil, self.box)


def analyze(f: SampledSignal, sys: FrameSystem, use_dual: bool = False) -> CoefficientGrid:
    """Inner products of f against the (primal or dual) atoms."""
    if (f.grid_n, f.box_size, f.d) != (sys.grid_n, sys.box, sys.d):
        raise InvalidInputError("signal grid does not match the system grid")
    spec = f.spectrum().reshape(-1)
    vol = sys.box ** sys.d
    entries = {}
    for j in sys.scales:
        info = sys.scale_info(j)
        rows = info["duals"] if use_dual else info["atoms"]
        c = (np.conj(rows) @ spec[info["mask"]]) / vol
        entries[j] = c.reshape(info["n_copies"], sys.nodes.n_nodes)
    band = sys.covered_band_mask().reshape(-1)
    total = float(np.sum(np.abs(spec) ** 2))
    oob = 0.0 if total == 0 else float(np.sum(np.abs(spec[~band]) ** 2) / total)
    return CoefficientGrid(
        entries=entries, j_range=sys.j_range, nodes=sys.nodes,
        dil=sys.dil, box=sys.box, out_of_band=oob,
    )


def synthesize(c: CoefficientGrid, sys: FrameSystem, use_dual: bool = False) -> SampledSignal:
    """Superposition sum_{j,copies,nodes} c * atom, accumulated spectrally."""
    n = sys.grid_n
    size = n ** sys.d
    spec = np.zeros(size, dtype=complex)
    for j in sys.scales:
        info = sys.scale_info(j)
        rows = info["duals"] if use_dual else info["atoms"]
        spec[info["mask"]] += rows.T @ c.flat(j)
    shape = (n,) if sys.d == 1 else (n, n)
    return SampledSignal.from_spectrum(spec.reshape(shape), sys.box)


def reconstruct(f: SampledSignal, sys: FrameSystem, direction: str = "dual-synthesis"):
    """Round-trip f through the frame; returns (signal, relative L2 error)."""
    if direction == "dual-synthesis":
        out = synthesize(analyze(f, sys, use_dual=False), sys, use_dual=True)
    elif direction == "dual-analysis":
        out = synthesize(analyze(f, sys, use_dual=True), sys, use_dual=False)
    else:
        raise InvalidInputError(f"unknown direction {direction!r}")
    denom = f.l2_norm()
    err = 0.0 if denom == 0 else \
        float(np.sqrt(np.sum(np.abs(out.values - f.values) ** 2) * f.cell_volume()) / denom)
    return out, err


# ---------------------------------------------------------------------------
# Frame bounds


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    converged: bool
    iterations: int
    trials: int


def _apply_frame_operator(sys: FrameSystem, spec_flat: np.ndarray, band: np.ndarray):
    """P_band S P_band applied to a flat spectrum vector."""
    vol = sys.box ** sys.d
    x = np.where(band, spec_flat, 0.0)
    out = np.zeros_like(x)
    for j in sys.scales:
        info = sys.scale_info(j)
        atoms = info["atoms"]
        c = (np.conj(atoms) @ x[info["mask"]]) / vol
        out[info["mask"]] += atoms.T @ c
    return np.where(band, out, 0.0)


def estimate_frame_bounds(
    sys: FrameSystem,
    band: np.ndarray | None = None,
    trials: int = 3,
    iters: int = 300,
    rq_tol: float = 1e-6,
    seed: int = 0,
) -> FrameBounds:
    """Extremal Rayleigh quotients of the band-restricted frame operator.

    The upper bound comes from power iteration, the lower one from inverse
    iteration with conjugate-gradient inner solves; both stop when the
    Rayleigh quotient moves less than rq_tol relatively.
    """
    rng = np.random.default_rng(seed)
    if band is None:
        band = sys.covered_band_mask()
    band = band.reshape(-1)
    if not np.any(band):
        raise InvalidInputError("empty band: nothing to estimate")
    vol = sys.box ** sys.d

    def rq(x):
        sx = _apply_frame_operator(sys, x, band)
        return float(np.real(np.vdot(x, sx)) / np.real(np.vdot(x, x)))

    def random_start():
        x = np.zeros(band.size, dtype=complex)
        k = int(band.sum())
        x[band] = rng.normal(size=k) + 1j * rng.normal(size=k)
        return x / np.linalg.norm(x)

    upper, lower = 0.0, np.inf
    used = 0
    ok = True
    for _ in range(trials):
        x = random_start()
        prev = 0.0
        for it in range(iters):
            x = _apply_frame_operator(sys, x, band)
            x /= np.linalg.norm(x)
            cur = rq(x)
            used = max(used, it + 1)
            if abs(cur - prev) <= rq_tol * max(cur, 1e-30):
                break
            prev = cur
        else:
            ok = False
        upper = max(upper, rq(x))

    for _ in range(trials):
        x = random_start()
        prev = np.inf
        for it in range(iters):
            x = _cg_solve(sys, x, band, tol=1e-10, max_iter=400)
            x /= np.linalg.norm(x)
            cur = rq(x)
            used = max(used, it + 1)
            if abs(cur - prev) <= rq_tol * max(cur, 1e-30):
                break
            prev = cur
        else:
            ok = False
        lower = min(lower, rq(x))
    # scale the operator-energy quotients to the signal normalization
    return FrameBounds(
        lower=float(lower), upper=float(upper),
        converged=ok, iterations=used, trials=trials,
    )


def _cg_solve(sys, rhs, band, tol=1e-10, max_iter=400):
    x = np.zeros_like(rhs)
    r = rhs - _apply_frame_operator(sys, x, band)
    p = r.copy()
    rs = np.real(np.vdot(r, r))
    rhs_norm = np.sqrt(np.real(np.vdot(rhs, rhs)))
    for _ in range(max_iter):
        ap = _apply_frame_operator(sys, p, band)
        alpha = rs / np.real(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        rs_new = np.real(np.vdot(r, r))
        if np.sqrt(rs_new) <= tol * rhs_norm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def lattice_reconstruct(f: SampledSignal, sys: FrameSystem) -> SampledSignal:
    """Exact lattice expansion: analyze/synthesize over k/b translates.

    Per scale the translation lattice closes on the box after
    P_j = b T / |det A^j| classes (d = 1, integer A, commensurate b); the
    full-class sums make this an exact identity on covered-band signals,
    which is the reference the node-side expansion is compared against.
    """
    if sys.d != 1:
        raise InvalidInputError("lattice reconstruction is implemented for d = 1")
    if not sys.lattice_exact:
        raise InvalidInputError("lattice width b is not commensurate with the box")
    spec = f.spectrum()
    out = np.zeros_like(spec)
    vol = sys.box
    for j in sys.scales:
        info = sys.scale_info(j)
        u = info["u"][:, 0]
        p_j = sys.b * sys.box / sys.dil.det_power(j)
        p_j_int = int(round(p_j))
        if abs(p_j - p_j_int) > 1e-9:
            raise InvalidInputError(f"scale {j}: lattice does not close (P_j={p_j})")
        kk = np.arange(p_j_int)
        det_half = sys.dil.det_power(j) ** 0.5
        phases = np.exp(-2j * np.pi * np.outer(kk / sys.b, u))
        psi_u = sys.psi.profile(info["u"])
        tau_u = sys.tau.profile(info["u"])
        c = (np.conj(phases * (det_half * psi_u)[None, :]) @ spec[info["mask"]]) / vol
        out[info["mask"]] += (phases * (det_half * tau_u)[None, :]).T @ c
    return SampledSignal.from_spectrum(out, sys.box)


def parseval_ratio(f: SampledSignal, sys: FrameSystem) -> float:
    """sum |<f, atoms>|^2 / ||f||^2 for one signal."""
    c = analyze(f, sys)
    return c.total_energy() / f.l2_norm() ** 2


def lattice_frame_symbol(sys: FrameSystem, w: np.ndarray) -> np.ndarray:
    """Multiplier b^d sum_j |psi((A^t)^j w)|^2 of the exact-lattice operator."""
    pts = w if np.asarray(w).ndim == 2 else np.asarray(w, dtype=float)[:, None]
    total = np.zeros(pts.shape[0])
    for j in sys.scales:
        total += np.abs(sys.psi.profile(pts @ sys.dil.t_power(j).T)) ** 2
    return sys.b ** sys.d * total


# ---------------------------------------------------------------------------
# Coefficient I/O (CSV rows: j, copy position coords..., re, im)


def write_coefficients_csv(path, c: CoefficientGrid, sys: FrameSystem) -> None:
    with open(path, "w") as fh:
        coords = ",".join(f"lambda{i}" for i in range(sys.d))
        fh.write(f"j,{coords},re,im\n")
        for j in sys.scales:
            info = sys.scale_info(j)
            pos = info["positions"]
            vals = c.flat(j)
            for p, v in zip(pos, vals):
                cs = ",".join(repr(float(x)) for x in p)
                fh.write(f"{j},{cs},{v.real!r},{v.imag!r}\n")


def read_coefficients_csv(path, sys: FrameSystem) -> CoefficientGrid:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    entries = {}
    for j in sys.scales:
        info = sys.scale_info(j)
        rows = data[data[:, 0] == j]
        if rows.shape[0] != info["positions"].shape[0]:
            raise InvalidInputError(
                f"scale {j}: expected {info['positions'].shape[0]} rows,"
                f" found {rows.shape[0]}"
            )
        vals = rows[:, -2] + 1j * rows[:, -1]
        entries[j] = vals.reshape(info["n_copies"], sys.nodes.n_nodes)
    return CoefficientGrid(
        entries=entries, j_range=sys.j_range, nodes=sys.nodes,
        dil=sys.dil, box=sys.box,
    )
