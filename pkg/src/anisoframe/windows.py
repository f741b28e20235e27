"""Bandlimited window construction: painless wavelets, analyzers, duals.

The frequency profile of every window is built from one C-infinity step
S(t): 0 for t <= 0, 1 for t >= 1, the normalized integral of the glue bump
exp(-s/t) * exp(-s/(1-t)). Gentle sharpness (s = 0.25 default) spreads the
transition across the whole margin, which is what makes the windows decay
usefully fast in space at desk scale.

Geometry: for a centered set V (interval/ball/box) with gauge g_V, the
window is

    h(w) = S((1 + d_out - g_AtV(w)) / d_out) * S((g_V(w) - 1 + d_in) / d_in)

so h is exactly 1 on the closed annulus Q = (A^t V) \\ V, vanishes outside
the delta_Q-inflation of A^t V, and vanishes on a ball around the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .dilations import ExpansiveDilation
from .errors import (
    AdmissibilityError,
    ConstructionError,
    IllPosedDualError,
    InvalidInputError,
)
from .nodes import NodeSet

DEFAULT_SHARPNESS = 0.25
_BOX_GAUGE_POWER = 8  # superellipse exponent standing in for the d=2 box gauge


class SmoothStep:
    """Normalized integral of exp(-s/t)exp(-s/(1-t)); C-inf, 0->1 on [0,1]."""

    def __init__(self, sharpness: float = DEFAULT_SHARPNESS, table_size: int = 2 ** 14):
        if sharpness <= 0:
            raise InvalidInputError("sharpness must be positive")
        self.sharpness = float(sharpness)
        u = np.linspace(0.0, 1.0, table_size + 1)
        bump = np.zeros_like(u)
        inner = (u > 0) & (u < 1)
        ui = u[inner]
        bump[inner] = np.exp(-self.sharpness / ui - self.sharpness / (1.0 - ui))
        cum = np.concatenate([[0.0], np.cumsum((bump[1:] + bump[:-1]) * 0.5 * np.diff(u))])
        norm = cum[-1]
        self._spline = CubicHermiteSpline(u, cum / norm, bump / norm)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t <= 0.0
        hi = t >= 1.0
        mid = ~(lo | hi)
        out[lo] = 0.0
        out[hi] = 1.0
        if np.any(mid):
            out[mid] = self._spline(t[mid])
        return out


@dataclass(frozen=True)
class SpectralWindow:
    """A window given by its closed-form frequency profile.

    profile maps an (n, d) frequency array to complex values. Support is
    reported both as a ball (center, radius) and axis-box halfwidths;
    zero_radius > 0 asserts the profile vanishes on that ball around 0.
    """

    d: int
    profile: object
    ball_center: np.ndarray
    ball_radius: float
    box_halfwidth: np.ndarray
    zero_radius: float
    params: dict = field(default_factory=dict)

    def __call__(self, w) -> np.ndarray:
        pts = np.asarray(w, dtype=float)
        if self.d == 1 and pts.ndim == 1:
            pts = pts[:, None]
        scalar = pts.ndim == 1 and self.d > 1
        if scalar:
            pts = pts[None, :]
        vals = self.profile(pts)
        return vals[0] if scalar else vals

    @property
    def zero_excluded(self) -> bool:
        return self.zero_radius > 0.0


@dataclass(frozen=True)
class PainlessConfig:
    """Inputs of the painless construction."""

    dil: ExpansiveDilation
    v_shape: str = "ball"            # 'ball' or 'box' (identical in d=1)
    v_halfwidth: float = 0.5
    delta_q: float | None = None     # additive margin; default 0.1 * R(A^t V)
    nodes: NodeSet | None = None     # admissibility checked when provided
    sharpness: float = DEFAULT_SHARPNESS


def _v_gauge(shape: str, v: float, d: int):
    if d == 1 or shape == "ball":
        def g(pts):
            return np.sqrt((pts ** 2).sum(axis=1)) / v
        return g
    if shape == "box":
        p = _BOX_GAUGE_POWER
        def g(pts):
            return ((np.abs(pts) / v) ** p).sum(axis=1) ** (1.0 / p)
        return g
    raise InvalidInputError(f"unknown V shape {shape!r}")


def _outer_radius(shape: str, v: float, dil: ExpansiveDilation) -> float:
    """Circumradius of A^t V."""
    if dil.d == 1:
        return v * abs(dil.entries[0, 0])
    at = dil.entries.T
    if shape == "ball":
        return v * dil.sigma_max()
    corners = np.array(list(product((-v, v), repeat=dil.d)))
    return float(np.max(np.linalg.norm(corners @ at.T, axis=1)))


def _outer_box_halfwidth(shape: str, v: float, dil: ExpansiveDilation) -> np.ndarray:
    """Per-axis halfwidth of the box enclosing A^t V."""
    at = dil.entries.T
    if dil.d == 1:
        return np.array([v * abs(at[0, 0])])
    if shape == "ball":
        return v * np.linalg.norm(at, axis=1)
    corners = np.array(list(product((-v, v), repeat=dil.d)))
    return np.max(np.abs(corners @ at.T), axis=0)


def _inradius(shape: str, v: float, d: int) -> float:
    if d == 1 or shape == "ball":
        return v
    return v * d ** (-1.0 / _BOX_GAUGE_POWER)


def build_h(cfg: PainlessConfig) -> SpectralWindow:
    """Construct the painless window profile h for Q = (A^t V) \\ V.

    Plateau exactly 1 on the closure of Q; support inside the delta_Q
    (additive) inflation of A^t V minus a deflated copy of V; reports the
    enclosing-ball radius r and rejects the configuration when the node
    gap violates gap * r < 1/4.
    """
    dil = cfg.dil
    d = dil.d
    v = float(cfg.v_halfwidth)
    if v <= 0:
        raise InvalidInputError("V must have positive halfwidth (0 interior to V)")
    r_out = _outer_radius(cfg.v_shape, v, dil)
    delta_q = cfg.delta_q if cfg.delta_q is not None else 0.1 * r_out
    if delta_q <= 0:
        raise InvalidInputError("delta_q must be positive")
    d_out = delta_q / r_out
    d_in = delta_q / v
    if d_in >= 1.0:
        raise ConstructionError(
            f"delta_q {delta_q} >= V halfwidth {v}: origin not excluded"
        )

    step = SmoothStep(cfg.sharpness)
    g_v = _v_gauge(cfg.v_shape, v, d)
    at_inv = dil.t_power(-1)

    def profile(pts):
        outer = step((1.0 + d_out - g_v(pts @ at_inv.T)) / d_out)
        inner = step((g_v(pts) - (1.0 - d_in)) / d_in)
        return outer * inner

    radius = r_out + delta_q
    if cfg.nodes is not None and cfg.nodes.gap * radius >= 0.25:
        raise AdmissibilityError(cfg.nodes.gap, radius)

    win = SpectralWindow(
        d=d,
        profile=profile,
        ball_center=np.zeros(d),
        ball_radius=radius,
        box_halfwidth=_outer_box_halfwidth(cfg.v_shape, v, dil) * (1.0 + d_out),
        zero_radius=(1.0 - d_in) * _inradius(cfg.v_shape, v, d),
        params={
            "kind": "painless",
            "v_shape": cfg.v_shape,
            "v_halfwidth": v,
            "delta_q": float(delta_q),
            "sharpness": cfg.sharpness,
        },
    )
    _verify_plateau(win, dil, g_v)
    return win


def _verify_plateau(win: SpectralWindow, dil: ExpansiveDilation, g_v, n=512, seed=0):
    """Sample Q densely and check inf |h| >= 1/2 (it is 1 by construction)."""
    rng = np.random.default_rng(seed)
    box = win.box_halfwidth / (1.0 + 1e-12)
    pts = rng.uniform(-box, box, size=(8 * n, dil.d))
    at_inv = dil.t_power(-1)
    in_q = (g_v(pts @ at_inv.T) <= 1.0) & (g_v(pts) >= 1.0)
    sample = pts[in_q][:n]
    if sample.shape[0] == 0:
        raise ConstructionError("could not sample the annulus Q")
    vals = np.abs(win.profile(sample))
    if vals.min() < 0.5:
        raise ConstructionError(f"plateau dipped to {vals.min():.3g} on Q")


def _points(w, d: int) -> np.ndarray:
    """Normalize scalar / (n,) / (n,d) frequency input to (n, d)."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim == 1:
        arr = arr[:, None] if d == 1 else arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != d:
        raise InvalidInputError(f"frequency array shape {arr.shape} for d={d}")
    return arr


def active_scales(win: SpectralWindow, dil: ExpansiveDilation, w: np.ndarray):
    """Integers j for which (A^t)^j w can touch supp(win), by annulus bounds."""
    w = _points(w, win.d)
    lo = win.zero_radius if win.zero_radius > 0 else 1e-12
    hi = win.ball_radius + np.linalg.norm(win.ball_center)
    out = []
    for j in range(-dil.max_scale, dil.max_scale + 1):
        r = np.linalg.norm(w @ dil.t_power(j).T, axis=1)
        if np.any((r >= lo * 0.999) & (r <= hi * 1.001)):
            out.append(j)
    return out


def calderon_sum(win: SpectralWindow, dil: ExpansiveDilation, w, j_range=None):
    """sum_j |win((A^t)^j w)|^2 over the active (or given) scales."""
    pts = _points(w, win.d)
    if np.any(np.linalg.norm(pts, axis=1) == 0.0):
        raise InvalidInputError("Calderon sum undefined at w = 0")
    scales = j_range if j_range is not None else active_scales(win, dil, pts)
    total = np.zeros(pts.shape[0])
    for j in scales:
        total += np.abs(win.profile(pts @ dil.t_power(j).T)) ** 2
    if np.isscalar(w) or (isinstance(w, np.ndarray) and w.ndim == 0):
        return float(total[0])
    return total


def calderon_dual(
    win: SpectralWindow, dil: ExpansiveDilation, b: float, floor: float = 1e-8
) -> SpectralWindow:
    """Dual window tau with tau_hat = psi_hat / (b^d * Calderon sum).

    Normalized so that the lattice expansion over translations at spacing
    1/b reproduces signals exactly; the pairing sum_j psi_hat tau_hat* then
    equals the constant b^{-d}, recorded as params['pairing_constant'].
    """
    if np.any(2.0 * win.box_halfwidth > b * (1 + 1e-12)):
        raise InvalidInputError(
            f"support box {2 * win.box_halfwidth} exceeds lattice width b={b}"
        )
    if not win.zero_excluded:
        raise InvalidInputError("window must exclude the origin")
    _check_sum_floor(win, dil, floor)

    def profile(pts):
        base = win.profile(pts)
        out = np.zeros_like(base, dtype=complex)
        mask = base != 0
        if np.any(mask):
            s = calderon_sum(win, dil, pts[mask])
            out[mask] = base[mask] / (b ** win.d * s)
        return out

    params = dict(win.params)
    params.update(kind="calderon-dual", b=float(b),
                  pairing_constant=float(b) ** (-win.d))
    return SpectralWindow(
        d=win.d,
        profile=profile,
        ball_center=win.ball_center.copy(),
        ball_radius=win.ball_radius,
        box_halfwidth=win.box_halfwidth.copy(),
        zero_radius=win.zero_radius,
        params=params,
    )


def _check_sum_floor(win, dil, floor, n=512, seed=1):
    rng = np.random.default_rng(seed)
    box = win.box_halfwidth
    pts = rng.uniform(-box, box, size=(8 * n, win.d))
    on_supp = np.abs(win.profile(pts)) > 1e-13
    sample = pts[on_supp][:n]
    if sample.shape[0] == 0:
        raise ConstructionError("could not sample the window support")
    s = calderon_sum(win, dil, sample)
    if s.min() < floor:
        raise IllPosedDualError(
            f"Calderon sum {s.min():.3e} below {floor:.1e} on the support"
        )


def calderon_pairing(psi: SpectralWindow, tau: SpectralWindow,
                     dil: ExpansiveDilation, w) -> np.ndarray:
    """sum_j psi_hat((A^t)^j w) conj(tau_hat((A^t)^j w))."""
    pts = _points(w, psi.d)
    scales = active_scales(psi, dil, pts)
    total = np.zeros(pts.shape[0], dtype=complex)
    for j in scales:
        u = pts @ dil.t_power(j).T
        total += psi.profile(u) * np.conj(tau.profile(u))
    return total


def choose_lattice_width(
    win: SpectralWindow,
    factor: float = 1.05,
    grid_box: float | None = None,
    j_max: int | None = None,
    dil: ExpansiveDilation | None = None,
):
    """Smallest admissible lattice width b = 2 * box halfwidth * factor.

    When grid parameters are supplied and the dilation is an integer matrix,
    b is rounded up so that every scale's translation lattice closes exactly
    on the periodic box (T * b * A^{-j} integral for 0 <= j <= j_max).
    Returns (b, exact_flag).
    """
    b_raw = 2.0 * float(np.max(win.box_halfwidth)) * factor
    if grid_box is None or j_max is None or dil is None:
        return b_raw, False
    if not dil.is_integer:
        return b_raw, False
    # smallest positive rational s with s * T * A^{-j_max} an integer
    # matrix: the rational lcm of the entries' reciprocals
    m = grid_box * np.linalg.inv(np.linalg.matrix_power(dil.entries, max(j_max, 0)))
    s = Fraction(0)
    for x in np.round(m, 9).ravel():
        f = Fraction(x).limit_denominator(10 ** 6)
        if f == 0:
            continue
        cand = Fraction(f.denominator, abs(f.numerator))
        if s == 0:
            s = cand
        else:
            s = Fraction(
                np.lcm(s.numerator, cand.numerator),
                np.gcd(s.denominator, cand.denominator),
            )
    if s == 0:
        return b_raw, False
    k = int(np.ceil(b_raw / float(s) - 1e-12))
    return float(k * s), True


def build_lp_analyzer(
    dil: ExpansiveDilation,
    v_halfwidth: float | None = None,
    sharpness: float = DEFAULT_SHARPNESS,
) -> SpectralWindow:
    """Littlewood-Paley analyzer: support in [-1/2,1/2]^d \\ {0}, covering.

    Uses the painless machinery on a ball V scaled so the inflated support
    of h stays inside the unit box. An explicit v_halfwidth overrides the
    automatic choice (e.g. 1/8 for A = 2 gives the plateau [1/8, 1/4]).
    """
    sigma = dil.sigma_max()
    if v_halfwidth is None:
        v_halfwidth = 0.98 * 0.5 / (1.1 * sigma)
    cfg = PainlessConfig(
        dil=dil,
        v_shape="ball",
        v_halfwidth=float(v_halfwidth),
        delta_q=None,
        sharpness=sharpness,
    )
    win = build_h(cfg)
    if np.any(win.box_halfwidth > 0.5 + 1e-12):
        raise ConstructionError(
            f"analyzer support halfwidth {win.box_halfwidth} exceeds 1/2;"
            " rescale V (pass a smaller v_halfwidth)"
        )
    params = dict(win.params)
    params["kind"] = "lp-analyzer"
    return SpectralWindow(
        d=win.d,
        profile=win.profile,
        ball_center=win.ball_center,
        ball_radius=win.ball_radius,
        box_halfwidth=win.box_halfwidth,
        zero_radius=win.zero_radius,
        params=params,
    )


# ---------------------------------------------------------------------------
# Time-domain evaluation and moments


def time_samples(win: SpectralWindow, xs: np.ndarray, oversample: float = 8.0):
    """Pointwise inverse transform at arbitrary positions (d = 1).

    Plain Riemann sum over the compact frequency support; the integrand is
    smooth and vanishes to all orders at the edges, so the rule converges
    spectrally. The frequency resolution scales with max |x| requested.
    """
    if win.d != 1:
        raise InvalidInputError("time_samples supports d = 1")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    hw = float(win.box_halfwidth[0])
    xmax = max(1.0, float(np.max(np.abs(xs))))
    n = int(max(4096, oversample * 2.0 * hw * xmax))
    w = np.linspace(-hw, hw, n)
    hv = win(w)
    dw = w[1] - w[0]
    out = np.zeros(xs.size, dtype=complex)
    chunk = max(1, int(4e6 // n))
    for s in range(0, xs.size, chunk):
        xx = xs[s:s + chunk]
        out[s:s + chunk] = np.exp(2j * np.pi * np.outer(xx, w)) @ hv * dw
    return out


def window_moment(win: SpectralWindow, beta: int, method: str = "spectral",
                  x_extent: float = 64.0) -> complex:
    """Moment integral x^beta psi(x) dx (d = 1).

    'spectral' evaluates the equivalent derivative of the profile at the
    origin by centered differences; with the origin excluded from the
    support the stencil sits on an identically-zero neighborhood, which is
    exactly why every moment vanishes. 'quadrature' integrates in time on
    [-x_extent, x_extent] and is reliable for low orders only.
    """
    if win.d != 1:
        raise InvalidInputError("window_moment supports d = 1")
    beta = int(beta)
    if method == "spectral":
        if win.zero_radius <= 0:
            raise InvalidInputError("spectral moments need an excluded origin")
        # iterated central differences on a stencil that sits inside the
        # excluded ball; a profile violating zero_radius shows up as a
        # nonzero combination
        h = 0.8 * win.zero_radius / max(beta, 1)
        stencil = np.arange(-beta, beta + 1) * h
        v = win(stencil).astype(complex)
        for _ in range(beta):
            v = (v[2:] - v[:-2]) / (2 * h)
        deriv = complex(v[0])
        return complex(deriv / (-2j * np.pi) ** beta)
    if method == "quadrature":
        n = int(max(8192, 64 * x_extent))
        xs = np.linspace(-x_extent, x_extent, n)
        vals = time_samples(win, xs)
        return complex(np.trapz(xs ** beta * vals, xs))
    raise InvalidInputError(f"unknown moment method {method!r}")
