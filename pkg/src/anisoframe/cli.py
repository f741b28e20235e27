"""Command-line front end: construct, balayage, analyze, synthesize, bounds,
norms, compact, verify.

One JSON config drives everything; flags only pick the subcommand, config
path, output directory, and verbosity. Exit codes: 0 ok, 1 config/schema
error, 2 mathematical rejection, 3 verification failure, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import (
    AdmissibilityError,
    AliasingError,
    AnisoFrameError,
    BalayageInfeasibleError,
    ContractionError,
    ExhaustedGridError,
    IllPosedDualError,
    InvalidInputError,
    NotExpansiveError,
    TruncationError,
)

_NUMERICAL_ERRORS = (
    AliasingError,
    BalayageInfeasibleError,
    ContractionError,
    ExhaustedGridError,
    IllPosedDualError,
    TruncationError,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_REJECTED = 2
EXIT_VERIFY = 3
EXIT_NUMERICAL = 4


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _log(args, *msg):
    if args.verbose:
        print(*msg)


def _sample_window(win, lo: float, hi: float, n: int = 2048):
    w = np.linspace(lo, hi, n)
    vals = win(w)
    return w, vals


def cmd_construct(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    nodes = cfg.build_nodes()
    psi = cfg.build_window(nodes)
    from .windows import build_lp_analyzer, calderon_dual, choose_lattice_width

    dil = cfg.build_dilation()
    b, exact = choose_lattice_width(
        psi, factor=float(cfg.dual.get("b_factor", 1.05)),
        grid_box=float(cfg.grid["box"]), j_max=int(cfg.j_range[1]), dil=dil,
    )
    if cfg.dual.get("b") is not None:
        b = float(cfg.dual["b"])
    tau = calderon_dual(psi, dil, b)
    analyzer = build_lp_analyzer(dil)
    hw = float(psi.box_halfwidth.max())
    for name, win in (("psi", psi), ("tau", tau), ("phi", analyzer)):
        lim = float(win.box_halfwidth.max()) * 1.2
        w, vals = _sample_window(win, -lim, lim)
        with open(out / f"{name}_spectrum.csv", "w") as fh:
            fh.write("w,value\n")
            for x, v in zip(w, np.real(vals)):
                fh.write(f"{x!r},{v!r}\n")
    product = nodes.gap * psi.ball_radius
    meta = {
        "gap": nodes.gap,
        "gap_resolution": nodes.gap_resolution,
        "radius": psi.ball_radius,
        "admissibility_product": product,
        "admissibility_limit": 0.25,
        "margin": 0.25 - product,
        "zero_radius": psi.zero_radius,
        "box_halfwidth": psi.box_halfwidth.tolist(),
        "b": b,
        "b_commensurate": exact,
        "pairing_constant": tau.params["pairing_constant"],
        "n_nodes": nodes.n_nodes,
        "max_per_cube": nodes.max_per_cube,
    }
    (out / "construct.json").write_text(json.dumps(meta, indent=2))
    print(
        f"admissibility: gap {nodes.gap:.6g} * r {psi.ball_radius:.6g}"
        f" = {product:.6g} < 0.25 (margin {meta['margin']:.6g})"
    )
    _log(args, f"wrote window samples and construct.json to {out}")
    return EXIT_OK


def cmd_balayage(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    system = cfg.build_system()
    table = system.table
    with open(out / "balayage.csv", "w") as fh:
        fh.write("k,lambda,re,im,residual_sup\n")
        for k in table.k_indices:
            sol = table.solutions[int(k)]
            pos = sol.positions(system.nodes)
            for p, a in zip(pos, sol.coeffs):
                fh.write(
                    f"{int(k)},{p[0]!r},{a.real!r},{a.imag!r},{sol.residual_sup!r}\n"
                )
    env = {
        str(int(k)): {
            "C": table.solutions[int(k)].envelope[0],
            "c": table.solutions[int(k)].envelope[1],
            "residual_sup": table.solutions[int(k)].residual_sup,
            "reg_weight": table.solutions[int(k)].reg_weight,
        }
        for k in table.k_indices
    }
    (out / "envelope.json").write_text(json.dumps(env, indent=2))
    print(f"balayage table: {len(table.solutions)} targets,"
          f" max residual {table.max_residual:.3e}")
    return EXIT_OK


def _load_or_make_signal(cfg: RunConfig, args, system):
    from .grids import read_anif, read_signal_csv
    from .verification import band_signal

    if args.signal:
        path = Path(args.signal)
        if path.suffix == ".csv":
            return read_signal_csv(path, float(cfg.grid["box"]))
        return read_anif(path)
    rng = np.random.default_rng(cfg.seed)
    return band_signal(system, rng)


def cmd_analyze(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    system = cfg.build_system()
    from .frames import analyze, write_coefficients_csv

    f = _load_or_make_signal(cfg, args, system)
    grid = analyze(f, system, use_dual=args.dual)
    write_coefficients_csv(out / "coefficients.csv", grid, system)
    print(f"analysis done: out-of-band fraction {grid.out_of_band:.3e}")
    return EXIT_OK


def cmd_synthesize(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    system = cfg.build_system()
    from .frames import read_coefficients_csv, synthesize
    from .grids import write_anif, write_signal_csv

    if not args.coefficients:
        raise InvalidInputError("synthesize needs --coefficients <csv>")
    grid = read_coefficients_csv(args.coefficients, system)
    sig = synthesize(grid, system, use_dual=args.dual)
    write_anif(out / "synthesis.anif", sig)
    write_signal_csv(out / "synthesis.csv", sig)
    print(f"synthesis written: L2 norm {sig.l2_norm():.6g}")
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    system = cfg.build_system()
    from .frames import estimate_frame_bounds

    fb = estimate_frame_bounds(system, trials=3, iters=600)
    report = {
        "A_hat": fb.lower, "B_hat": fb.upper, "converged": fb.converged,
        "iterations": fb.iterations, "trials": fb.trials,
        "band": "covered annuli union",
    }
    (out / "bounds.json").write_text(json.dumps(report, indent=2))
    print(f"frame bounds: A_hat={fb.lower:.6g}, B_hat={fb.upper:.6g}")
    return EXIT_OK


def cmd_norms(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    system = cfg.build_system()
    from .frames import analyze
    from .norms import SpaceParams, lambda_seq_norm, lp_function_norm
    from .windows import build_lp_analyzer

    f = _load_or_make_signal(cfg, args, system)
    analyzer = build_lp_analyzer(system.dil)
    coeffs = analyze(f, system)
    with open(out / "norms.csv", "w") as fh:
        fh.write("family,alpha,p,q,coefficient_norm,function_norm\n")
        for entry in cfg.norms:
            sp = SpaceParams(
                entry["family"], float(entry["alpha"]),
                float(entry["p"]), float(entry["q"]),
            )
            cn = lambda_seq_norm(coeffs, sp)
            fn = lp_function_norm(f, analyzer, system.dil, sp)
            fh.write(
                f"{sp.family},{sp.alpha!r},{sp.p!r},{sp.q!r},{cn!r},{fn!r}\n"
            )
    print(f"norm batch of {len(cfg.norms)} entries written")
    return EXIT_OK


def cmd_compact(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    nodes = cfg.build_nodes()
    psi = cfg.build_window(nodes)
    from .compactify import build_correctors, choose_R, measure_perturbation, truncate_correct

    cc = cfg.compact
    order = int(cc.get("n_moments", 3))
    r_grid = [float(r) for r in cc.get("r_grid", [4, 8, 16])]
    decay = float(cc.get("decay_order", 6))
    deriv = int(cc.get("deriv_order", 2))
    basis = build_correctors(order)
    eps = cc.get("eps")
    if eps is None:
        probe = truncate_correct(psi, r_grid[-1], basis)
        eps = 2.0 * measure_perturbation(probe, decay, deriv, 16.0).weighted_sup
    win, reports = choose_R(psi, float(eps), decay, deriv, basis, r_grid)
    with open(out / "compact_window.csv", "w") as fh:
        fh.write("x,value\n")
        keep = np.abs(win.axis) <= win.support_radius + 1.0
        for x, v in zip(win.axis[keep], win.values[keep]):
            fh.write(f"{x!r},{v!r}\n")
    meta = {
        "R": win.radius,
        "N": order,
        "eps_target": float(eps),
        "eps_achieved": win.eps_achieved,
        "moment_residuals": win.moment_residuals.tolist(),
        "corrections": win.corrections.tolist(),
        "sup_norms": [r.sup_norm for r in reports],
        "radii_tried": [r.radius for r in reports],
    }
    (out / "compact_window.json").write_text(json.dumps(meta, indent=2))
    print(f"compact window at R={win.radius}: eps {win.eps_achieved:.3e}"
          f" (target {float(eps):.3e})")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    from .verification import run_battery

    tamper = bool(cfg.debug.get("tamper_duals", False))
    which = cfg.debug.get("criteria")
    results = run_battery(cfg, tamper_duals=tamper, which=which)
    report = {
        str(r.cid): {"name": r.name, "passed": r.passed,
                     "seconds": r.seconds, **_jsonable(r.details)}
        for r in results
    }
    (out / "verify.json").write_text(json.dumps(report, indent=2))
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    if failed:
        print(f"FAILED criteria: {[r.cid for r in failed]}")
        return EXIT_VERIFY
    return EXIT_OK


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            out[k] = v.item()
        elif isinstance(v, tuple):
            out[k] = list(v)
        else:
            out[k] = v
    return out


_COMMANDS = {
    "construct": cmd_construct,
    "balayage": cmd_balayage,
    "analyze": cmd_analyze,
    "synthesize": cmd_synthesize,
    "bounds": cmd_bounds,
    "norms": cmd_norms,
    "compact": cmd_compact,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="anisoframe",
        description="Irregular anisotropic wavelet frames at desk scale",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--signal", default=None,
                        help="input signal (.anif or .csv) for analyze/norms")
    parser.add_argument("--coefficients", default=None,
                        help="coefficient CSV for synthesize")
    parser.add_argument("--dual", action="store_true",
                        help="use the dual system in analyze/synthesize")
    args = parser.parse_args(argv)

    try:
        cfg = RunConfig.from_json(args.config)
        return _COMMANDS[args.command](cfg, args)
    except (InvalidInputError,) as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except (NotExpansiveError, AdmissibilityError) as exc:
        print(f"rejected: {exc}", file=_sys.stderr)
        return EXIT_REJECTED
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL
    except AnisoFrameError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
