"""Numerical balayage: represent a pure frequency on a ball by node exponentials.

For a target w the solver finds coefficients a_lambda with

    e_{-w}(x) ~= sum_lambda a_lambda e_{-lambda}(x)   on the ball B_r(x0),

using regularized least squares on a quadrature discretization, with the
regularization weight picked by a discrepancy sweep (largest weight whose
verification-grid residual meets the tolerance). Feasibility at small
residual is guaranteed by the gap condition gap * r < 1/4; the coefficient
decay exp(-c |w - lambda|^{1/2}) is fitted a posteriori, never assumed.

Nodes enter with periodic unwrapping: for each target the nearest periodic
copy of each node is used, and solutions for targets a full box apart are
translates of each other, which the table exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    AdmissibilityError,
    BalayageInfeasibleError,
    InvalidInputError,
    TruncationError,
)
from .nodes import NodeSet, periodic_diff
from .windows import SpectralWindow

REG_SWEEP = np.logspace(-14, -4, 8)


@dataclass(frozen=True)
class BallSpec:
    center: np.ndarray
    radius: float

    @classmethod
    def of(cls, center, radius: float) -> "BallSpec":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if radius <= 0:
            raise InvalidInputError("ball radius must be positive")
        return cls(center=c, radius=float(radius))

    @property
    def d(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class BalayageProblem:
    ball: BallSpec
    nodes: NodeSet
    target: np.ndarray
    r_trunc: float = 12.0
    tol: float = 1e-8
    quad_per_axis: int = 32      # raised automatically to resolve oscillations

    def __post_init__(self):
        if self.nodes.gap * self.ball.radius >= 0.25:
            raise AdmissibilityError(self.nodes.gap, self.ball.radius)


@dataclass(frozen=True)
class BalayageSolution:
    node_ids: np.ndarray         # rows into nodes.points
    unwrap: np.ndarray           # integer box shifts: position = point + box*unwrap
    coeffs: np.ndarray           # complex
    residual_sup: float          # on the verification grid
    reg_weight: float
    envelope: tuple              # (C, c) of |a| <= C exp(-c dist^{1/2}), c>0 wanted
    target: np.ndarray = field(default=None)

    def positions(self, nodes: NodeSet) -> np.ndarray:
        return nodes.points[self.node_ids] + nodes.box * self.unwrap


def _ball_quadrature(ball: BallSpec, n_per_axis: int):
    """Nodes/weights on the ball: Gauss-Legendre (d=1) or polar tensor (d=2)."""
    gl_x, gl_w = leggauss(n_per_axis)
    if ball.d == 1:
        pts = ball.center[0] + ball.radius * gl_x
        return pts[:, None], ball.radius * gl_w
    # polar: radial GL on [0,1] mapped with Jacobian rho, uniform angles
    rho = 0.5 * (gl_x + 1.0)
    wr = 0.5 * gl_w
    ang = 2.0 * np.pi * (np.arange(n_per_axis) + 0.5) / n_per_axis
    wa = 2.0 * np.pi / n_per_axis
    r = ball.radius * rho
    pts = np.empty((n_per_axis * n_per_axis, 2))
    wts = np.empty(n_per_axis * n_per_axis)
    for i, (ri, wi) in enumerate(zip(r, wr)):
        s = slice(i * n_per_axis, (i + 1) * n_per_axis)
        pts[s, 0] = ball.center[0] + ri * np.cos(ang)
        pts[s, 1] = ball.center[1] + ri * np.sin(ang)
        wts[s] = ball.radius ** 2 * rho[i] * wi * wa
    return pts, wts


def _exp_matrix(x: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """e_{-f}(x) columns: exp(-2 pi i x . f)."""
    return np.exp(-2j * np.pi * (x @ freqs.T))


def _fit_envelope(dist: np.ndarray, coeffs: np.ndarray):
    mag = np.abs(coeffs)
    keep = mag > 1e-14
    if keep.sum() < 10:
        return (float(mag.max(initial=0.0)), 0.0)
    slope, intercept = np.polyfit(np.sqrt(dist[keep]), np.log(mag[keep]), 1)
    return (float(np.exp(intercept)), float(-slope))


def solve_balayage(prob: BalayageProblem) -> BalayageSolution:
    """Minimum-norm regularized solve with a discrepancy sweep.

    Residuals are measured in sup norm on a verification grid four times
    finer than the solve quadrature; the solution reported is the one with
    the largest regularization weight meeting prob.tol.
    """
    nodes, ball = prob.nodes, prob.ball
    target = np.atleast_1d(np.asarray(prob.target, dtype=float))
    if target.size != ball.d:
        raise InvalidInputError("target dimension mismatch")

    diff = periodic_diff(nodes.points, target[None, :], nodes.box)
    dist = np.linalg.norm(diff, axis=1)
    sel = dist <= prob.r_trunc
    if not np.any(sel):
        raise InvalidInputError(
            f"no node within r_trunc={prob.r_trunc} of target {target}"
        )
    ids = np.nonzero(sel)[0]
    positions = target[None, :] + diff[sel]
    unwrap = np.round((positions - nodes.points[ids]) / nodes.box).astype(int)

    # recentered system: dividing by the unimodular target exponential turns
    # the right side into the constant 1 and caps column oscillation at
    # r_trunc * radius, independent of where the target sits in the box
    rel = positions - target[None, :]
    n_quad = max(
        prob.quad_per_axis, int(np.ceil(6.0 * prob.r_trunc * ball.radius)) + 48
    )
    qx, qw = _ball_quadrature(ball, n_quad)
    sw = np.sqrt(qw)

    m = _exp_matrix(qx, rel) * sw[:, None]
    y = np.ones(qx.shape[0], dtype=complex) * sw
    u, sv, vh = np.linalg.svd(m, full_matrices=False)
    uy = u.conj().T @ y

    if ball.d == 1:
        vx = np.linspace(
            ball.center[0] - ball.radius, ball.center[0] + ball.radius, 4 * n_quad
        )[:, None]
    else:
        vx, _ = _ball_quadrature(ball, 2 * n_quad)
    ev = _exp_matrix(vx, rel)
    yv = np.ones(vx.shape[0], dtype=complex)

    best = None
    for mu in REG_SWEEP[::-1]:
        filt = sv / (sv ** 2 + mu ** 2)
        a = vh.conj().T @ (filt * uy)
        res = float(np.max(np.abs(yv - ev @ a)))
        if best is None or res < best[2]:
            best = (mu, a, res)
        if res <= prob.tol:
            dist_sel = np.linalg.norm(positions - target[None, :], axis=1)
            return BalayageSolution(
                node_ids=ids,
                unwrap=unwrap,
                coeffs=a,
                residual_sup=res,
                reg_weight=float(mu),
                envelope=_fit_envelope(dist_sel, a),
                target=target,
            )
    raise BalayageInfeasibleError(best[2], prob.tol)


@dataclass(frozen=True)
class BalayageTable:
    """Solutions for the lattice targets k/b, one per residue class mod b*T.

    node_pairs holds, per node, the lattice indices re-expressed in the
    node's own frame (ktilde = k - bT * unwrap), so that ktilde/b is the
    actual lattice position nearest the principal node; this is what the
    dual-generator combination uses.
    """

    b: float
    k_indices: np.ndarray
    solutions: dict
    nodes: NodeSet
    ball: BallSpec
    tol: float

    def node_pairs(self, node_id: int):
        """(ktilde array, coeff array) for one node across all solves."""
        kk, cc = [], []
        p0 = int(round(self.b * self.nodes.box))
        for k in self.k_indices:
            sol = self.solutions[int(k)]
            pos = np.nonzero(sol.node_ids == node_id)[0]
            for p in pos:
                kk.append(k - p0 * int(sol.unwrap[p, 0]))
                cc.append(sol.coeffs[p])
        return np.asarray(kk, dtype=float), np.asarray(cc)

    @property
    def max_residual(self) -> float:
        return max(s.residual_sup for s in self.solutions.values())


def lattice_balayage_table(
    nodes: NodeSet,
    b: float,
    ball: BallSpec,
    tol: float = 1e-8,
    r_trunc: float = 12.0,
    k_indices=None,
    quad_per_axis: int = 32,
) -> BalayageTable:
    """Solve for every lattice target k/b in one box period (d = 1).

    A failing target aborts with its index attached.
    """
    if ball.d != 1:
        raise InvalidInputError("lattice tables are built for d = 1")
    p0 = int(round(b * nodes.box))
    if abs(p0 - b * nodes.box) > 1e-9:
        raise InvalidInputError(
            f"b*T = {b * nodes.box} not an integer; pick a commensurate b"
        )
    if k_indices is None:
        k_indices = np.arange(-(p0 // 2), p0 - p0 // 2)
    sols = {}
    for k in k_indices:
        prob = BalayageProblem(
            ball=ball,
            nodes=nodes,
            target=np.array([k / b]),
            r_trunc=r_trunc,
            tol=tol,
            quad_per_axis=quad_per_axis,
        )
        try:
            sols[int(k)] = solve_balayage(prob)
        except BalayageInfeasibleError as exc:
            raise BalayageInfeasibleError(exc.best_residual, tol) from exc
    return BalayageTable(
        b=float(b), k_indices=np.asarray(k_indices), solutions=sols,
        nodes=nodes, ball=ball, tol=tol,
    )


def assemble_dual_generator(
    node_id: int,
    table: BalayageTable,
    tau: SpectralWindow,
    r_dual: float = None,
    tau_l2: float = None,
    tail_limit: float = 1e-6,
) -> SpectralWindow:
    """Dual generator for one node: tau translated along the lattice.

    The spectrum is tau_hat(u) * sum_k conj(a_k) exp(-2 pi i (k/b) u) over
    the lattice positions within r_dual of the node. The dropped tail is
    estimated from the fitted decay envelope; a too-small r_dual raises.
    """
    kk, cc = table.node_pairs(node_id)
    lam = table.nodes.points[node_id]
    pos = kk / table.b
    if r_dual is not None:
        keep = np.abs(pos - lam[0]) <= r_dual
        dropped = np.abs(cc[~keep]).sum()
        kk, cc = kk[keep], cc[keep]
    else:
        r_dual = np.inf
        dropped = 0.0
    env_c, env_rate = _max_envelope(table)
    if np.isfinite(r_dual) and env_rate > 0:
        # envelope bound on the lattice tail beyond r_dual, both sides
        dists = r_dual + np.arange(0, 40 * table.b) / table.b
        tail = 2.0 * env_c * float(np.sum(np.exp(-env_rate * np.sqrt(dists))))
    else:
        tail = dropped
    tail = max(tail, dropped)
    if tau_l2 is not None and tail > tail_limit * tau_l2:
        raise TruncationError(
            f"estimated dual tail {tail:.3e} exceeds {tail_limit:.0e} * ||tau||;"
            " increase r_dual"
        )

    b = table.b
    conj_c = np.conj(cc)

    def profile(pts):
        base = tau.profile(pts)
        phase = np.exp(-2j * np.pi * np.outer(pts[:, 0], kk / b))
        return base * (phase @ conj_c)

    params = dict(tau.params)
    params.update(kind="dual-generator", node=int(node_id),
                  node_position=float(lam[0]), n_terms=int(kk.size),
                  tail_estimate=float(tail))
    return SpectralWindow(
        d=tau.d,
        profile=profile,
        ball_center=tau.ball_center.copy(),
        ball_radius=tau.ball_radius,
        box_halfwidth=tau.box_halfwidth.copy(),
        zero_radius=tau.zero_radius,
        params=params,
    )


def _max_envelope(table: BalayageTable):
    cs = [s.envelope[0] for s in table.solutions.values()]
    rates = [s.envelope[1] for s in table.solutions.values() if s.envelope[1] > 0]
    if not rates:
        return (max(cs, default=0.0), 0.0)
    return (max(cs), min(rates))
