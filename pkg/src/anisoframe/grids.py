"""Discretized signal model: periodic box, uniform grid, spectral transforms.

Signals live on [-T/2, T/2)^d with N samples per axis. The spectrum holds
samples of the continuous Fourier transform on the sorted frequency grid
{m/T : m = -N/2..N/2-1}; with that normalization the box inner product is
(1/T)^d times the plain sum over spectral bins, and Parseval is exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dilations import ExpansiveDilation
from .errors import AliasingError, InvalidInputError

_ANIF_MAGIC = b"ANIF"
_ANIF_VERSION = 1


def space_axis(n: int, box: float) -> np.ndarray:
    """Sample positions (n,) on one axis: -T/2 + i*T/N."""
    return (np.arange(n) - n // 2) * (box / n)


def freq_axis(n: int, box: float) -> np.ndarray:
    """Sorted frequencies m/T, m = -N/2 .. N/2-1."""
    return (np.arange(n) - n // 2) / box


def freq_points(n: int, box: float, d: int) -> np.ndarray:
    """All grid frequencies as an (n^d, d) array, axis-0-major."""
    ax = freq_axis(n, box)
    if d == 1:
        return ax[:, None]
    if d == 2:
        w0, w1 = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([w0.ravel(), w1.ravel()])
    raise InvalidInputError(f"d={d} not supported (d in {{1,2}})")


@dataclass
class SampledSignal:
    """Complex samples on the periodic box, row-major over axes."""

    d: int
    box_size: float
    grid_n: int
    values: np.ndarray

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidInputError(f"d={self.d} not supported")
        expected = (self.grid_n,) if self.d == 1 else (self.grid_n, self.grid_n)
        v = np.asarray(self.values, dtype=complex)
        if v.shape != expected:
            raise InvalidInputError(f"values shape {v.shape}, expected {expected}")
        self.values = v

    @classmethod
    def zeros(cls, d: int, box_size: float, grid_n: int) -> "SampledSignal":
        shape = (grid_n,) if d == 1 else (grid_n, grid_n)
        return cls(d, box_size, grid_n, np.zeros(shape, dtype=complex))

    @classmethod
    def from_spectrum(cls, spec: np.ndarray, box_size: float) -> "SampledSignal":
        """Inverse transform of continuous-FT samples (sorted grid)."""
        spec = np.asarray(spec, dtype=complex)
        d = spec.ndim
        n = spec.shape[0]
        vals = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(spec)))
        vals *= (n / box_size) ** d
        return cls(d, box_size, n, vals)

    def spectrum(self) -> np.ndarray:
        """Continuous-FT samples f_hat(m/T) on the sorted grid."""
        n, t = self.grid_n, self.box_size
        spec = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(self.values)))
        return spec * (t / n) ** self.d

    def cell_volume(self) -> float:
        return (self.box_size / self.grid_n) ** self.d

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.cell_volume()))

    def inner(self, other: "SampledSignal") -> complex:
        if (self.d, self.grid_n, self.box_size) != (other.d, other.grid_n, other.box_size):
            raise InvalidInputError("signals live on different grids")
        return complex(np.sum(self.values * np.conj(other.values)) * self.cell_volume())


def spectral_inner(spec_f: np.ndarray, spec_g: np.ndarray, box_size: float) -> complex:
    """<f, g> evaluated from spectra: (1/T)^d sum f_hat conj(g_hat)."""
    d = spec_f.ndim
    return complex(np.sum(spec_f * np.conj(spec_g)) / box_size ** d)


def dilate_translate(f, dil: ExpansiveDilation, j: int, lam) -> SampledSignal:
    """D_{A^j} T_lam f on the grid, computed spectrally.

    For a grid signal every required source frequency (A^t)^j w must land on
    the grid (exact for integer A and j >= 0); otherwise the offending
    frequency is reported. Window-backed signals should be dilated through
    their closed-form profiles instead (see frames.atom_spectrum).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.size != f.d:
        raise InvalidInputError(f"translation has dim {lam.size}, signal dim {f.d}")
    n, t, d = f.grid_n, f.box_size, f.d
    spec = f.spectrum()
    atj = dil.t_power(j)
    det_j = dil.det_power(j)

    idx = np.arange(n) - n // 2
    if d == 1:
        m_src = atj[0, 0] * idx  # source index (A^t)^j m, must be integer
        src = np.round(m_src).astype(int)
        off = np.abs(m_src - src) > 1e-9
        if np.any(off):
            bad = idx[np.argmax(off)] / t
            raise AliasingError(bad, f"(A^t)^{j} w off-grid for a grid signal")
        out = np.zeros(n, dtype=complex)
        inside = np.abs(src) <= n // 2 - 1
        half = n // 2
        out[inside.nonzero()[0]] = spec[src[inside] + half]
        # values mapped from beyond Nyquist are zero by band-limitation,
        # but nonzero spectrum pushed outside the grid is real aliasing
        w_out = idx / t
        phase = np.exp(-2j * np.pi * lam[0] * (atj[0, 0] * w_out))
        out *= np.sqrt(det_j) * phase
        return SampledSignal.from_spectrum(out, t)

    # d == 2
    m0, m1 = np.meshgrid(idx, idx, indexing="ij")
    msrc0 = atj[0, 0] * m0 + atj[0, 1] * m1
    msrc1 = atj[1, 0] * m0 + atj[1, 1] * m1
    s0 = np.round(msrc0).astype(int)
    s1 = np.round(msrc1).astype(int)
    if np.max(np.abs(msrc0 - s0)) > 1e-9 or np.max(np.abs(msrc1 - s1)) > 1e-9:
        raise AliasingError(None, f"(A^t)^{j} w off-grid for a grid signal")
    half = n // 2
    inside = (np.abs(s0) <= half - 1) & (np.abs(s1) <= half - 1)
    out = np.zeros((n, n), dtype=complex)
    out[inside] = spec[s0[inside] + half, s1[inside] + half]
    wj0 = msrc0 / t
    wj1 = msrc1 / t
    out *= np.sqrt(det_j) * np.exp(-2j * np.pi * (lam[0] * wj0 + lam[1] * wj1))
    return SampledSignal.from_spectrum(out, t)


# ---------------------------------------------------------------------------
# Signal I/O: ANIF binary (32-byte header) and CSV


def write_anif(path, sig: SampledSignal) -> None:
    header = struct.pack(
        "<4sIIId8x", _ANIF_MAGIC, _ANIF_VERSION, sig.d, sig.grid_n, sig.box_size
    )
    flat = sig.values.ravel()
    payload = np.empty(2 * flat.size, dtype="<f8")
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_anif(path) -> SampledSignal:
    with open(path, "rb") as fh:
        header = fh.read(32)
        if len(header) != 32:
            raise InvalidInputError("truncated ANIF header")
        magic, version, d, n, t = struct.unpack("<4sIIId8x", header)
        if magic != _ANIF_MAGIC:
            raise InvalidInputError(f"bad magic {magic!r}")
        if version != _ANIF_VERSION:
            raise InvalidInputError(f"unsupported ANIF version {version}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    count = n ** d
    if raw.size != 2 * count:
        raise InvalidInputError(f"expected {2 * count} floats, found {raw.size}")
    vals = raw[0::2] + 1j * raw[1::2]
    shape = (n,) if d == 1 else (n, n)
    return SampledSignal(d, t, n, vals.reshape(shape))


def write_signal_csv(path, sig: SampledSignal) -> None:
    ax = space_axis(sig.grid_n, sig.box_size)
    with open(path, "w") as fh:
        coords = ",".join(f"x{i}" for i in range(sig.d))
        fh.write(f"{coords},re,im\n")
        if sig.d == 1:
            for x, v in zip(ax, sig.values):
                fh.write(f"{x!r},{v.real!r},{v.imag!r}\n")
        else:
            for i, x0 in enumerate(ax):
                for k, x1 in enumerate(ax):
                    v = sig.values[i, k]
                    fh.write(f"{x0!r},{x1!r},{v.real!r},{v.imag!r}\n")


def read_signal_csv(path, box_size: float) -> SampledSignal:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    d = data.shape[1] - 2
    count = data.shape[0]
    n = round(count ** (1.0 / d))
    if n ** d != count:
        raise InvalidInputError(f"{count} rows is not a full {d}-d grid")
    vals = (data[:, -2] + 1j * data[:, -1]).reshape((n,) if d == 1 else (n, n))
    return SampledSignal(d, box_size, n, vals)
