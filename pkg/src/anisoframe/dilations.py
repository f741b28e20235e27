"""Expansive dilation matrices and the parallelepipeds they generate.

An expansive matrix has every eigenvalue strictly outside the unit circle;
its integer powers play the role of dyadic scales. Powers are cached on the
wrapper so repeated scale loops stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import InvalidInputError, NotExpansiveError, ScaleRangeError

MAX_SCALE = 16
_OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True, eq=False)
class ExpansiveDilation:
    """A validated expansive matrix with cached powers."""

    entries: np.ndarray
    det_abs: float
    eig_moduli: tuple
    d: int
    max_scale: int = MAX_SCALE
    _powers: dict = field(default_factory=dict, repr=False)
    _t_powers: dict = field(default_factory=dict, repr=False)

    def power(self, j: int) -> np.ndarray:
        """A^j for integer j, negative j via the inverse."""
        j = int(j)
        if abs(j) > self.max_scale:
            raise ScaleRangeError(f"|j|={abs(j)} exceeds max scale {self.max_scale}")
        if j not in self._powers:
            m = np.linalg.matrix_power(self.entries, j)
            if np.max(np.abs(m)) > _OVERFLOW_LIMIT:
                raise ScaleRangeError(f"entries of A^{j} overflow")
            self._powers[j] = m
        return self._powers[j]

    def t_power(self, j: int) -> np.ndarray:
        """(A^t)^j, used on the frequency side."""
        j = int(j)
        if j not in self._t_powers:
            self._t_powers[j] = self.power(j).T.copy()
        return self._t_powers[j]

    def det_power(self, j: int) -> float:
        """|det A|^j."""
        return self.det_abs ** int(j)

    @property
    def is_integer(self) -> bool:
        return bool(np.all(self.entries == np.round(self.entries)))

    def sigma_max(self) -> float:
        """Largest singular value of A (= of A^t)."""
        return float(np.linalg.svd(self.entries, compute_uv=False)[0])


def check_expansive(matrix) -> ExpansiveDilation:
    """Validate a square real matrix as expansive.

    Raises InvalidInputError for malformed input and NotExpansiveError when
    some eigenvalue modulus is <= 1 (the offending modulus is attached).
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix entries must be finite")
    det = np.linalg.det(a)
    if det == 0.0:
        raise InvalidInputError("matrix is singular")
    moduli = np.abs(np.linalg.eigvals(a))
    worst = float(moduli.min())
    if worst <= 1.0 + 1e-14:
        raise NotExpansiveError(worst)
    return ExpansiveDilation(
        entries=a.copy(),
        det_abs=float(abs(det)),
        eig_moduli=tuple(sorted(float(m) for m in moduli)),
        d=a.shape[0],
    )


def matrix_power(dil: ExpansiveDilation, j: int) -> np.ndarray:
    return dil.power(j)


@dataclass(frozen=True)
class AnisoCube:
    """The parallelepiped A^j([0,1]^d + k)."""

    dil: ExpansiveDilation
    j: int
    k: tuple

    @property
    def volume(self) -> float:
        return self.dil.det_power(self.j)

    def corners(self) -> np.ndarray:
        """All 2^d corner points, shape (2^d, d)."""
        d = self.dil.d
        aj = self.dil.power(self.j)
        k = np.asarray(self.k, dtype=float)
        pts = np.array(list(product((0.0, 1.0), repeat=d)))
        return (pts + k) @ aj.T

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Componentwise membership test A^{-j} x - k in [0,1)^d."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        local = pts @ self.dil.power(-self.j).T - np.asarray(self.k, dtype=float)
        return np.all((local >= 0.0) & (local < 1.0), axis=1)


def cube_volume_exact(dil: ExpansiveDilation, j: int) -> float:
    """Exact parallelepiped volume |det(A^j)| from the corner matrix.

    Computed independently of det_abs so it can cross-check the volume law.
    """
    return float(abs(np.linalg.det(dil.power(j))))
