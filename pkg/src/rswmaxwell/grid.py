"""Periodic rectangular box with Fourier (spectral) differentiation.

Fields are plain complex ndarrays whose last three axes are ``(nx, ny, nz)``;
any leading axes are component axes (3 for a vector field, 8 for a state).
Wavenumbers use the standard FFT ordering with the Nyquist mode kept, so
every derivative is the exact multiplier ``i k_j`` and all derivative
operators commute.  Axes with a single sample have ``k = 0``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

THREADS_ENV = "RSWMAXWELL_THREADS"

_AXES = {"x": 0, "y": 1, "z": 2}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _axis(axis) -> int:
    if isinstance(axis, str):
        return _AXES[axis]
    if axis in (0, 1, 2):
        return int(axis)
    raise ValueError(f"bad axis {axis!r}")


@dataclass(frozen=True)
class Grid:
    """Uniformly sampled periodic box ``[0, Lx) x [0, Ly) x [0, Lz)``."""

    shape: tuple[int, int, int]
    lengths: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lengths = tuple(float(length) for length in self.lengths)
        if len(shape) != 3 or len(lengths) != 3:
            raise ValueError("grid needs three sample counts and three lengths")
        if any(n < 1 for n in shape):
            raise ValueError(f"sample counts must be >= 1, got {shape}")
        if not all(length > 0 for length in lengths):
            raise ValueError(f"box lengths must be positive, got {lengths}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(length / n for length, n in zip(self.lengths, self.shape))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(j for j, n in enumerate(self.shape) if n > 1)

    @property
    def min_spacing(self) -> float:
        active = self.active_axes or (0, 1, 2)
        return min(self.spacing[j] for j in active)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable sample coordinates ``(x, y, z)``."""
        axes = [np.arange(n) * d for n, d in zip(self.shape, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords)

    @cached_property
    def k1d(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(2 * np.pi * scipy.fft.fftfreq(n, d=length / n)
                     for n, length in zip(self.shape, self.lengths))

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavenumber arrays ``(kx, ky, kz)``."""
        return tuple(np.meshgrid(*self.k1d, indexing="ij", sparse=True))

    @cached_property
    def k2(self) -> np.ndarray:
        kx, ky, kz = self.k
        return kx**2 + ky**2 + kz**2

    @property
    def k_max(self) -> float:
        return float(np.sqrt(sum(np.max(np.abs(k))**2 for k in self.k1d)))

    def wavevector(self, modes) -> np.ndarray:
        """Wavevector ``2 pi m_j / L_j`` of integer mode numbers."""
        modes = np.asarray(modes, dtype=float)
        return 2 * np.pi * modes / np.asarray(self.lengths)

    def is_resolved(self, kvec, tol: float = 1e-9) -> bool:
        """True if ``kvec`` is a lattice wavevector strictly below Nyquist on every axis."""
        m = np.asarray(kvec, dtype=float) * np.asarray(self.lengths) / (2 * np.pi)
        if np.any(np.abs(m - np.round(m)) > tol):
            return False
        for j, n in enumerate(self.shape):
            mj = int(round(m[j]))
            # the Nyquist pattern is the same for +k and -k, so it has no direction
            if mj != 0 and 2 * abs(mj) >= n:
                return False
        return True

    def check(self, field: np.ndarray):
        if tuple(np.shape(field)[-3:]) != self.shape:
            raise ValueError(f"field trailing shape {np.shape(field)[-3:]} does not match grid {self.shape}")

    # --- transforms -------------------------------------------------------
    def fft(self, f: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(np.asarray(f, dtype=complex), axes=(-3, -2, -1), workers=_workers())

    def ifft(self, fk: np.ndarray) -> np.ndarray:
        # backward normalisation: the 1/N sits on the inverse
        return scipy.fft.ifftn(fk, axes=(-3, -2, -1), workers=_workers())

    # --- derivatives ------------------------------------------------------
    def ddx(self, f: np.ndarray, axis) -> np.ndarray:
        """Spectral partial derivative of ``f`` along ``axis``."""
        j = _axis(axis)
        if self.shape[j] == 1:
            return np.zeros(np.shape(f), dtype=complex)
        return self.ifft(1j * self.k[j] * self.fft(f))

    def grad(self, f: np.ndarray) -> np.ndarray:
        fk = self.fft(f)
        return np.stack([self.ifft(1j * kj * fk) for kj in self.k])

    def div(self, v: np.ndarray) -> np.ndarray:
        vk = self.fft(v)
        kx, ky, kz = self.k
        return self.ifft(1j * (kx * vk[0] + ky * vk[1] + kz * vk[2]))

    def curl(self, v: np.ndarray) -> np.ndarray:
        vk = self.fft(v)
        kx, ky, kz = self.k
        ck = 1j * np.stack([ky * vk[2] - kz * vk[1],
                            kz * vk[0] - kx * vk[2],
                            kx * vk[1] - ky * vk[0]])
        return self.ifft(ck)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(-self.k2 * self.fft(f))

    def dplus(self, f: np.ndarray) -> np.ndarray:
        """``d_x + i d_y``."""
        kx, ky, _ = self.k
        return self.ifft(1j * (kx + 1j * ky) * self.fft(f))

    def dminus(self, f: np.ndarray) -> np.ndarray:
        """``d_x - i d_y``."""
        kx, ky, _ = self.k
        return self.ifft(1j * (kx - 1j * ky) * self.fft(f))

    # --- quadrature -------------------------------------------------------
    def integrate(self, f: np.ndarray) -> complex:
        """Rectangle-rule integral over the box (spectrally exact for periodic fields)."""
        return self.cell_volume * np.sum(f, axis=(-3, -2, -1))

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """``<f, g> = integral of sum_c conj(f_c) g_c``."""
        return complex(self.cell_volume * np.vdot(f, g))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.cell_volume) * np.linalg.norm(np.ravel(f)))


def random_bandlimited(grid: Grid, ncomp=None, kmax_fraction: float = 0.25,
                       rng=None, real: bool = False) -> np.ndarray:
    """Random field whose Fourier content stays below ``kmax_fraction`` of Nyquist on every axis.

    With ``ncomp=None`` the result is a scalar field, otherwise it has a
    leading component axis of that length.
    """
    rng = np.random.default_rng(rng)
    lead = () if ncomp is None else (int(ncomp),)
    shape = lead + grid.shape
    fk = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    mask = np.ones(grid.shape, dtype=bool)
    for j, n in enumerate(grid.shape):
        if n == 1:
            continue
        m = np.abs(scipy.fft.fftfreq(n, d=1.0 / n))
        keep = m <= max(1, int(kmax_fraction * (n // 2)))
        sl = [None, None, None]
        sl[j] = slice(None)
        mask = mask & keep[tuple(sl)]
    f = grid.ifft(fk * mask) * np.sqrt(grid.size)
    if real:
        f = f.real.astype(complex)
    return f
