"""Irregular anisotropic wavelet frames at desk scale.

Construct bandlimited painless windows for an expansive matrix and an
arbitrary well-spread node set, compute their balayage dual systems,
analyze / synthesize / reconstruct on a periodic grid, evaluate
anisotropic Besov and Triebel-Lizorkin norms, and produce compactly
supported moment-corrected windows with perturbed reconstruction.
"""

from .dilations import AnisoCube, ExpansiveDilation, check_expansive, matrix_power
from .errors import AnisoFrameError
from .grids import SampledSignal, dilate_translate
from .nodes import NodeSet, gap, generate, split
from .windows import (
    PainlessConfig,
    SpectralWindow,
    build_h,
    build_lp_analyzer,
    calderon_dual,
    calderon_pairing,
    calderon_sum,
)
from .balayage import (
    BalayageProblem,
    BalayageSolution,
    BallSpec,
    assemble_dual_generator,
    lattice_balayage_table,
    solve_balayage,
)
from .frames import (
    CoefficientGrid,
    FrameSystem,
    analyze,
    build_frame_system,
    estimate_frame_bounds,
    reconstruct,
    synthesize,
)
from .norms import SpaceParams, besov_seq_norm, lambda_seq_norm, lp_function_norm, triebel_seq_norm
from .compactify import (
    CompactWindow,
    MomentCorrectorBasis,
    build_correctors,
    choose_R,
    molecule_check,
    perturbed_reconstruct,
    truncate_correct,
)

__version__ = "0.1.0"
