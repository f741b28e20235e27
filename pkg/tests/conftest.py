import numpy as np
import pytest

from anisoframe.dilations import check_expansive
from anisoframe.frames import build_frame_system
from anisoframe.nodes import generate, split
from anisoframe.windows import PainlessConfig, build_h, build_lp_analyzer

BOX = 32.0
GRID_N = 4096
J_RANGE = (-3, 3)


@pytest.fixture(scope="session")
def dil():
    return check_expansive([[2.0]])


@pytest.fixture(scope="session")
def dil2():
    return check_expansive([[0.0, -2.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def ref_nodes():
    pts = generate("jittered", box=BOX, seed=7, d=1, spacing=0.25, delta=0.05)
    return split(pts, BOX)


@pytest.fixture(scope="session")
def psi(dil, ref_nodes):
    return build_h(
        PainlessConfig(dil=dil, v_halfwidth=0.5, delta_q=0.1, nodes=ref_nodes)
    )


@pytest.fixture(scope="session")
def analyzer(dil):
    return build_lp_analyzer(dil)


@pytest.fixture(scope="session")
def system(psi, dil, ref_nodes):
    return build_frame_system(psi, dil, ref_nodes, J_RANGE, GRID_N, BOX)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
