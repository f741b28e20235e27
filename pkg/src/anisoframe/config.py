"""Run configuration: one JSON file drives every CLI subcommand.

Validation is fail-fast: the whole file is checked for shape and basic
consistency before any numerical work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass
class RunConfig:
    matrix: list
    window: dict = field(default_factory=dict)
    node_set: dict = field(default_factory=dict)
    j_range: list = field(default_factory=lambda: [-3, 3])
    grid: dict = field(default_factory=lambda: {"n": 4096, "box": 32.0})
    balayage: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    compact: dict = field(default_factory=dict)
    norms: list = field(default_factory=list)
    seed: int = 0
    debug: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise InvalidInputError("config root must be a JSON object")
        if "matrix" not in raw:
            raise InvalidInputError("config is missing required key 'matrix'")
        known = {
            "matrix", "window", "node_set", "j_range", "grid", "balayage",
            "dual", "compact", "norms", "seed", "debug",
        }
        unknown = set(raw) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{k: raw[k] for k in raw})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError("matrix must be square")
        if m.shape[0] not in (1, 2):
            raise InvalidInputError("only d in {1, 2} is supported")
        if len(self.j_range) != 2 or self.j_range[0] > self.j_range[1]:
            raise InvalidInputError("j_range must be [j_min, j_max]")
        g = self.grid
        if "n" not in g or "box" not in g:
            raise InvalidInputError("grid needs keys 'n' and 'box'")
        if int(g["n"]) <= 0 or (int(g["n"]) & (int(g["n"]) - 1)) != 0:
            raise InvalidInputError("grid n must be a positive power of two")
        if float(g["box"]) <= 0:
            raise InvalidInputError("grid box must be positive")
        w = self.window
        if w.get("v_shape", "ball") not in ("ball", "box"):
            raise InvalidInputError("window v_shape must be 'ball' or 'box'")
        if float(w.get("v_halfwidth", 0.5)) <= 0:
            raise InvalidInputError("window v_halfwidth must be positive")
        ns = self.node_set
        kind = ns.get("kind", "jittered")
        if kind not in ("lattice", "jittered", "poisson-thinned", "file"):
            raise InvalidInputError(f"unknown node_set kind {kind!r}")
        if kind == "file" and "path" not in ns:
            raise InvalidInputError("node_set kind 'file' needs a path")
        bl = self.balayage
        if float(bl.get("tol", 1e-8)) <= 0:
            raise InvalidInputError("balayage tol must be positive")
        for entry in self.norms:
            if entry.get("family") not in ("B", "F"):
                raise InvalidInputError("norm entries need family 'B' or 'F'")
            for key in ("alpha", "p", "q"):
                if key not in entry:
                    raise InvalidInputError(f"norm entry missing {key!r}")

    # -- builders ------------------------------------------------------

    def build_dilation(self):
        from .dilations import check_expansive

        return check_expansive(self.matrix)

    def build_nodes(self):
        from .nodes import generate, split

        box = float(self.grid["box"])
        ns = dict(self.node_set)
        kind = ns.pop("kind", "jittered")
        if kind == "file":
            pts = np.genfromtxt(ns["path"], delimiter=",")
            if pts.ndim == 1:
                pts = pts[:, None]
            return split(pts, box)
        ns.setdefault("spacing", 0.25)
        ns.setdefault("delta", 0.05)
        if kind != "jittered":
            ns.pop("delta", None)
        if kind == "lattice":
            pts = generate("lattice", box, self.seed, self.dim, spacing=ns["spacing"])
        elif kind == "jittered":
            pts = generate(
                "jittered", box, self.seed, self.dim,
                spacing=ns["spacing"], delta=ns["delta"],
            )
        else:
            pts = generate(
                "poisson-thinned", box, self.seed, self.dim,
                r_min=ns.get("r_min", 0.3), r_max=ns.get("r_max", 0.8),
            )
        return split(pts, box)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def build_window(self, nodes=None):
        from .windows import PainlessConfig, build_h

        dil = self.build_dilation()
        w = self.window
        return build_h(PainlessConfig(
            dil=dil,
            v_shape=w.get("v_shape", "ball"),
            v_halfwidth=float(w.get("v_halfwidth", 0.5)),
            delta_q=w.get("delta_q"),
            nodes=nodes,
            sharpness=float(w.get("sharpness", 0.25)),
        ))

    def build_system(self):
        from .frames import build_frame_system

        dil = self.build_dilation()
        nodes = self.build_nodes()
        psi = self.build_window(nodes)
        bl = self.balayage
        return build_frame_system(
            psi, dil, nodes,
            (int(self.j_range[0]), int(self.j_range[1])),
            int(self.grid["n"]), float(self.grid["box"]),
            b=self.dual.get("b"),
            b_factor=float(self.dual.get("b_factor", 1.05)),
            tol=float(bl.get("tol", 1e-8)),
            r_trunc=float(bl.get("r_trunc", 12.0)),
        )
