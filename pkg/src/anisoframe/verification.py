"""The acceptance battery: nine measurable criteria over the reference setup.

Each criterion is a function returning a CriterionResult with the measured
numbers it judged; the same battery backs `anisoframe verify` and the
pytest acceptance module. Criteria are property-based at desk scale; all
tolerances are fixed here, not tuned per run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .compactify import (
    SampledMolecule,
    WindowMolecule,
    build_correctors,
    measure_perturbation,
    molecule_check,
    perturbed_reconstruct,
    truncate_correct,
)
from .config import RunConfig
from .dilations import ExpansiveDilation
from .frames import (
    FrameSystem,
    analyze,
    estimate_frame_bounds,
    lattice_reconstruct,
    parseval_ratio,
    reconstruct,
    synthesize,
)
from .grids import SampledSignal
from .norms import SpaceParams, lambda_seq_norm, lp_function_norm, seq_norm
from .windows import (
    SpectralWindow,
    build_lp_analyzer,
    calderon_pairing,
    time_samples,
)


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        keys = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{tag}] criterion {self.cid} ({self.name}): {keys} [{self.seconds:.1f}s]"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def default_config() -> RunConfig:
    """The reference desk-scale setup used by the acceptance criteria."""
    return RunConfig.from_dict({
        "matrix": [[2.0]],
        "window": {"v_shape": "ball", "v_halfwidth": 0.5, "delta_q": 0.1},
        "node_set": {"kind": "jittered", "spacing": 0.25, "delta": 0.05},
        "j_range": [-3, 3],
        "grid": {"n": 4096, "box": 32.0},
        "balayage": {"tol": 1e-8, "r_trunc": 12.0},
        "dual": {"b_factor": 1.05},
        "compact": {"n_moments": 3, "decay_order": 6, "deriv_order": 2,
                     "r_grid": [4, 8, 16]},
        "seed": 7,
    })


def band_signal(sys: FrameSystem, rng: np.random.Generator) -> SampledSignal:
    band = sys.covered_band_mask().reshape(-1)
    spec = np.zeros(band.size, dtype=complex)
    k = int(band.sum())
    spec[band] = rng.normal(size=k) + 1j * rng.normal(size=k)
    shape = (sys.grid_n,) if sys.d == 1 else (sys.grid_n, sys.grid_n)
    return SampledSignal.from_spectrum(spec.reshape(shape), sys.box)


def _timed(fn):
    def runner(*args, **kwargs):
        t0 = time.time()
        res = fn(*args, **kwargs)
        res.seconds = time.time() - t0
        return res
    return runner


@_timed
def criterion_calderon(sys: FrameSystem, n_freq: int = 1000, seed: int = 11):
    """Pairing sum_j psi tau* is the constant b^{-d} on covered frequencies."""
    rng = np.random.default_rng(seed)
    lo = sys.psi.ball_radius / sys.dil.det_power(sys.j_range[1]) * 1.02
    hi = sys.psi.zero_radius * sys.dil.det_power(-sys.j_range[0]) * 0.98
    mags = rng.uniform(lo, hi, size=n_freq)
    signs = rng.choice([-1.0, 1.0], size=n_freq)
    w = mags * signs
    pair = calderon_pairing(sys.psi, sys.tau, sys.dil, w)
    kappa = sys.tau.params["pairing_constant"]
    worst = float(np.max(np.abs(pair - kappa)) / kappa)
    return CriterionResult(
        1, "Calderon identity", worst <= 1e-10,
        {"max_rel_dev": worst, "constant": kappa, "n_freq": n_freq},
    )


@_timed
def criterion_frame(sys: FrameSystem, n_signals: int = 20, seed: int = 12):
    """Lower bound positive; Parseval sums inside the estimated bounds."""
    bounds = estimate_frame_bounds(sys, trials=2, iters=600)
    rng = np.random.default_rng(seed)
    ratios = np.array([
        parseval_ratio(band_signal(sys, rng), sys) for _ in range(n_signals)
    ])
    ok = (
        bounds.lower > 0
        and np.all(ratios >= bounds.lower * (1 - 1e-6))
        and np.all(ratios <= bounds.upper * (1 + 1e-6))
    )
    return CriterionResult(
        2, "L2 frame property", bool(ok),
        {"A_hat": bounds.lower, "B_hat": bounds.upper,
         "ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
         "converged": bounds.converged},
    )


@_timed
def criterion_balayage(sys: FrameSystem, n_targets: int = 50):
    """Residuals at tolerance and strictly negative decay slopes."""
    ks = list(sys.table.k_indices[:n_targets])
    res = [sys.table.solutions[int(k)].residual_sup for k in ks]
    slopes = []
    for k in ks:
        sol = sys.table.solutions[int(k)]
        if sol.node_ids.size >= 30:
            c, rate = sol.envelope
            slopes.append(-rate)
    ok = max(res) <= sys.table.tol and all(s < 0 for s in slopes)
    return CriterionResult(
        3, "balayage", bool(ok),
        {"residual_max": float(max(res)), "tol": sys.table.tol,
         "slope_max": float(max(slopes)), "n_targets": len(ks),
         "n_with_slope": len(slopes)},
    )


def tamper_dual_coefficients(sys: FrameSystem, factor: float = 1.05) -> None:
    """Test hook: corrupt one balayage solution and drop the caches."""
    k = int(sys.table.k_indices[len(sys.table.k_indices) // 2])
    sol = sys.table.solutions[k]
    object.__setattr__(sol, "coeffs", sol.coeffs * factor)
    sys._cache.clear()


@_timed
def criterion_reconstruction(sys: FrameSystem, n_signals: int = 10, seed: int = 13):
    """Both dual directions at 1e-6; lattice interchange at 1e-7."""
    rng = np.random.default_rng(seed)
    errs_s, errs_a, inter = [], [], []
    for _ in range(n_signals):
        f = band_signal(sys, rng)
        out_s, e_s = reconstruct(f, sys, "dual-synthesis")
        _, e_a = reconstruct(f, sys, "dual-analysis")
        lat = lattice_reconstruct(f, sys)
        diff = float(
            np.sqrt(np.sum(np.abs(lat.values - out_s.values) ** 2) * f.cell_volume())
            / f.l2_norm()
        )
        errs_s.append(e_s)
        errs_a.append(e_a)
        inter.append(diff)
    ok = max(errs_s) <= 1e-6 and max(errs_a) <= 1e-6 and max(inter) <= 1e-7
    return CriterionResult(
        4, "irregular atomic decomposition", bool(ok),
        {"dual_synthesis_max": float(max(errs_s)),
         "dual_analysis_max": float(max(errs_a)),
         "interchange_max": float(max(inter)), "n_signals": n_signals},
    )


@_timed
def criterion_norms(dil: ExpansiveDilation, n_grids: int = 100, seed: int = 14):
    """f^{0,2}_2 == l2; unit single entries; solidity and homogeneity."""
    rng = np.random.default_rng(seed)
    sp22 = SpaceParams("F", 0.0, 2.0, 2.0)
    worst_l2 = 0.0
    for _ in range(n_grids):
        grid, l2 = _random_grid(rng, dil.d)
        v = seq_norm(grid, dil, sp22)
        worst_l2 = max(worst_l2, abs(v - l2) / max(l2, 1e-300))
    singles_ok = True
    for fam in ("B", "F"):
        for (a, p, q) in [(0.0, 2.0, 2.0), (1.0, 1.0, np.inf), (-0.7, np.inf, 3.0)]:
            v = seq_norm({0: {(0,) * dil.d: 1.0}}, dil, SpaceParams(fam, a, p, q))
            singles_ok &= abs(v - 1.0) < 1e-14
    sol_ok, hom_ok = True, True
    for _ in range(n_grids):
        grid, _ = _random_grid(rng, dil.d)
        fam = "B" if rng.random() < 0.5 else "F"
        sp = SpaceParams(fam, float(rng.uniform(-1, 1)),
                         float(rng.choice([1.0, 1.5, 2.0, 4.0])),
                         float(rng.choice([1.0, 2.0, 3.0])))
        v = seq_norm(grid, dil, sp)
        t = float(rng.uniform(0.1, 5.0))
        scaled = {j: {k: t * x for k, x in row.items()} for j, row in grid.items()}
        hom_ok &= abs(seq_norm(scaled, dil, sp) - t * v) <= 1e-10 * max(1.0, t * v)
        j0 = list(grid)[0]
        k0 = list(grid[j0])[0]
        dropped = {j: dict(row) for j, row in grid.items()}
        del dropped[j0][k0]
        sol_ok &= seq_norm(dropped, dil, sp) <= v * (1 + 1e-12)
    ok = worst_l2 <= 1e-12 and singles_ok and sol_ok and hom_ok
    return CriterionResult(
        5, "norm machinery", bool(ok),
        {"l2_dev": worst_l2, "singles_exact": singles_ok,
         "solidity": sol_ok, "homogeneity": hom_ok},
    )


def _random_grid(rng, d):
    grid = {}
    total = 0.0
    for j in rng.choice(np.arange(-3, 4), size=3, replace=False):
        row = {}
        for _ in range(rng.integers(1, 6)):
            k = tuple(int(x) for x in rng.integers(-6, 7, size=d))
            v = complex(rng.normal(), rng.normal())
            row[k] = v
        grid[int(j)] = row
    for row in grid.values():
        for v in row.values():
            total += abs(v) ** 2
    return grid, float(np.sqrt(total))


@_timed
def criterion_equivalence(sys: FrameSystem, analyzer: SpectralWindow,
                          n_signals: int = 10, seed: int = 15):
    """Coefficient norm vs function norm stays in a factor-10 band."""
    rng = np.random.default_rng(seed)
    spaces = [SpaceParams("F", 0.0, 2.0, 2.0), SpaceParams("F", 0.0, 1.0, 1.0)]
    details = {}
    ok = True
    for sp in spaces:
        ratios = []
        for _ in range(n_signals):
            f = band_signal(sys, rng)
            num = lambda_seq_norm(analyze(f, sys), sp)
            den = lp_function_norm(f, analyzer, sys.dil, sp)
            ratios.append(num / den)
        spread = max(ratios) / min(ratios)
        key = f"a{sp.alpha:g}p{sp.p:g}q{sp.q:g}"
        details[f"spread_{key}"] = float(spread)
        details[f"const_{key}"] = float(np.median(ratios))
        ok &= spread <= 10.0
    return CriterionResult(6, "norm equivalence", bool(ok),
                           {**details, "n_signals": n_signals})


@_timed
def criterion_compact(psi: SpectralWindow, order: int = 3,
                      r_grid=(4.0, 8.0, 16.0)):
    """Vanishing moments, exact support, small-constants check, monotone sup."""
    from .compactify import choose_R

    basis = build_correctors(order)
    sups, moment_worst, support_ok = [], 0.0, True
    final = None
    for r in r_grid:
        win = truncate_correct(psi, float(r), basis)
        sups.append(float(np.max(np.abs(win.perturbation()))))
        moment_worst = max(moment_worst, float(win.moment_residuals.max()))
        outside = np.abs(win.axis) > win.support_radius
        support_ok &= bool(np.all(win.values[outside] == 0.0))
        final = win
    # small-constants run: target twice the best attainable value, then
    # confirm the selector's own verification at its chosen radius
    rep = measure_perturbation(final, decay_order=6.0, deriv_order=2, x_max=16.0)
    eps = 2.0 * rep.weighted_sup
    chosen, _reports = choose_R(
        psi, eps, decay_order=6.0, deriv_order=2, basis=basis,
        r_grid=r_grid, x_max=16.0,
    )
    small_ok = np.isfinite(chosen.eps_achieved) and chosen.eps_achieved <= eps
    mono = all(sups[i] > sups[i + 1] for i in range(len(sups) - 1))
    ok = moment_worst <= 1e-9 and support_ok and small_ok and mono
    return CriterionResult(
        7, "compact window", bool(ok),
        {"moment_worst": moment_worst, "support_exact": support_ok,
         "sup_sequence": tuple(round(s, 6) for s in sups), "monotone": mono,
         "chosen_R": chosen.radius, "eps_target": eps,
         "eps_achieved": chosen.eps_achieved,
         "poly_constant": rep.poly_constant},
    )


@_timed
def criterion_neumann(sys: FrameSystem, psi: SpectralWindow, seed: int = 16,
                      order: int = 3, radius: float = 15.0):
    """Geometric decay at ratio <= 0.5 and 1e-4 accuracy within 50 steps."""
    basis = build_correctors(order)
    win = truncate_correct(psi, radius, basis)
    rng = np.random.default_rng(seed)
    f = band_signal(sys, rng)
    res = perturbed_reconstruct(f, win, sys, max_iter=50)
    reached = [i for i, e in enumerate(res.history, start=1) if e <= 1e-4]
    ok = res.ratio <= 0.5 and bool(reached) and res.history[-1] <= 1e-4
    return CriterionResult(
        8, "perturbed reconstruction", bool(ok),
        {"ratio": res.ratio, "final_err": res.history[-1],
         "iters": res.iterations,
         "iters_to_1e-4": reached[0] if reached else -1, "R": radius},
    )


@_timed
def criterion_molecules(sys: FrameSystem, psi: SpectralWindow, seed: int = 17):
    """Painless and dual families pass; a planted mean defect is caught."""
    from .balayage import assemble_dual_generator

    rng = np.random.default_rng(seed)
    grid = np.linspace(-24.0, 24.0, 3072)
    picks = rng.choice(sys.nodes.n_nodes, size=3, replace=False)
    painless = [
        WindowMolecule(psi, int(j), float(sys.nodes.points[i, 0]))
        for j, i in zip((-2, 0, 3), picks)
    ]
    rep_p = molecule_check(painless, 10.0, 2, 5, grid)
    duals = [
        WindowMolecule(
            assemble_dual_generator(int(i), sys.table, sys.tau),
            int(j), float(sys.nodes.points[i, 0]), positioned=True,
        )
        for j, i in zip((-1, 0, 2), picks)
    ]
    rep_d = molecule_check(duals, 10.0, 2, 5, grid)
    # planted defect: add a bump so the zeroth moment is visibly nonzero
    axis = np.linspace(-2.0, 2.0, 4097)
    from .compactify import bump

    defect_vals = bump(axis)
    defect = SampledMolecule(axis=axis, values=defect_vals, scale=0,
                             position=float(sys.nodes.points[picks[0], 0]))
    rep_bad = molecule_check([painless[1], defect], 10.0, 2, 5, grid)
    ok = (
        rep_p.violation is None and np.isfinite(rep_p.constant)
        and rep_d.violation is None and np.isfinite(rep_d.constant)
        and rep_bad.violation is not None and rep_bad.violation[2] == 0
    )
    return CriterionResult(
        9, "molecule checker", bool(ok),
        {"painless_C": rep_p.constant, "dual_C": rep_d.constant,
         "defect_caught": rep_bad.violation is not None},
    )


def run_battery(cfg: RunConfig | None = None, tamper_duals: bool = False,
                which=None) -> list:
    """Build the reference system once and run the requested criteria."""
    cfg = cfg or default_config()
    sys = cfg.build_system()
    if tamper_duals:
        tamper_dual_coefficients(sys)
    psi = sys.psi
    dil = sys.dil
    analyzer = build_lp_analyzer(dil)
    jobs = {
        1: lambda: criterion_calderon(sys),
        2: lambda: criterion_frame(sys),
        3: lambda: criterion_balayage(sys),
        4: lambda: criterion_reconstruction(sys),
        5: lambda: criterion_norms(dil),
        6: lambda: criterion_equivalence(sys, analyzer),
        7: lambda: criterion_compact(psi),
        8: lambda: criterion_neumann(sys, psi),
        9: lambda: criterion_molecules(sys, psi),
    }
    which = which or sorted(jobs)
    return [jobs[i]() for i in which]
