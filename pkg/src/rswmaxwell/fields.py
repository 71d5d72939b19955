"""Field states and the exact linear maps between their representations.

    (E, B)  ->  F   (8 real-basis components, scaled by sqrt(eps), 1/sqrt(mu))
    F       ->  Psi (pointwise unitary TT)
    Psi     ->  Phi (pointwise permutation Sphi)

Every state is a complex ndarray with the component axis first and the
grid axes last, so an 8-component state has shape ``(8, nx, ny, nz)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .grid import Grid, random_bandlimited
from .medium import MediumFrame

NULL_SLOTS = (3, 7)


@dataclass(frozen=True, eq=False)
class EMState:
    E: np.ndarray
    B: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        E = np.asarray(self.E, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        if E.shape != B.shape or E.shape[0] != 3:
            raise ValueError(f"E and B must both have shape (3, nx, ny, nz); got {E.shape} and {B.shape}")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "B", B)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0):
        z = np.zeros((3,) + grid.shape, dtype=complex)
        return cls(z, z.copy(), t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.E)) and np.all(np.isfinite(self.B)))


@dataclass(frozen=True, eq=False)
class SourceState:
    """Current density ``J`` (3 components) and charge density ``rho``."""

    J: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=complex)
        rho = np.asarray(self.rho, dtype=complex)
        if J.shape[0] != 3 or J.shape[1:] != rho.shape:
            raise ValueError(f"J must be (3,) + rho.shape; got {J.shape} and {rho.shape}")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(np.zeros((3,) + grid.shape, complex), np.zeros(grid.shape, complex))


def _match(grid: Grid, *arrays):
    for a in arrays:
        if tuple(np.shape(a)[-3:]) != grid.shape:
            raise ValueError(f"field on a {np.shape(a)[-3:]} grid does not match medium grid {grid.shape}")


def apply_matrix(m: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Multiply every grid point of ``state`` by the constant matrix ``m``."""
    return np.einsum("ij,j...->i...", m, state)


# --- (E, B) <-> F ----------------------------------------------------------

def em_to_F(em: EMState, med: MediumFrame) -> np.ndarray:
    _match(med.grid, em.E, em.B)
    se, sm = np.sqrt(med.eps), np.sqrt(med.mu)
    f = np.zeros((8,) + med.grid.shape, dtype=complex)
    f[0:3] = se * em.E
    f[4:7] = em.B / sm
    return f / np.sqrt(2)


def F_to_em(f: np.ndarray, med: MediumFrame, t: float = 0.0) -> EMState:
    """Inverse of :func:`em_to_F`; the null slots are dropped."""
    _match(med.grid, f)
    f = np.sqrt(2) * np.asarray(f)
    return EMState(f[0:3] / np.sqrt(med.eps), f[4:7] * np.sqrt(med.mu), t)


def null_norm(f: np.ndarray) -> float:
    """Largest magnitude found in the two null slots of an F state."""
    return float(np.abs(np.asarray(f)[list(NULL_SLOTS)]).max())


# --- RSW vectors -------------------------------------------------------------

def em_to_rsw(em: EMState, med: MediumFrame):
    """``F+- = sqrt(eps/2) (E +- i v B)``."""
    _match(med.grid, em.E, em.B)
    s = np.sqrt(med.eps / 2)
    return s * (em.E + 1j * med.v * em.B), s * (em.E - 1j * med.v * em.B)


def rsw_to_em(Fp, Fm, med: MediumFrame, t: float = 0.0) -> EMState:
    s = np.sqrt(2 / med.eps)
    return EMState(s * (Fp + Fm) / 2, s * (Fp - Fm) / (2j * med.v), t)


def rsw_to_psi(Fp, Fm) -> np.ndarray:
    """Build Psi from the RSW pair using the explicit component formulas."""
    Fp, Fm = np.asarray(Fp), np.asarray(Fm)
    return 0.5 * np.stack([
        -Fp[0] + 1j * Fp[1], Fp[2], Fp[2], Fp[0] + 1j * Fp[1],
        -Fm[0] - 1j * Fm[1], Fm[2], Fm[2], Fm[0] - 1j * Fm[1],
    ])


def psi_to_rsw(psi):
    """Inverse of :func:`rsw_to_psi`.  The z parts average the duplicated slots."""
    p = np.asarray(psi)
    Fp = np.stack([p[3] - p[0], -1j * (p[0] + p[3]), p[1] + p[2]])
    Fm = np.stack([p[7] - p[4], 1j * (p[4] + p[7]), p[5] + p[6]])
    return Fp, Fm


def duplicate_residual(psi) -> float:
    """How far Psi is from having equal slots 1, 2 and equal slots 5, 6."""
    p = np.asarray(psi)
    return float(max(np.abs(p[1] - p[2]).max(), np.abs(p[5] - p[6]).max()))


# --- F <-> Psi <-> Phi ---------------------------------------------------------

def F_to_psi(f, consts: algebra.ConstantSet | None = None) -> np.ndarray:
    TT = algebra.transform_TT() if consts is None else consts.TT
    return apply_matrix(TT, f)


def psi_to_F(psi, consts: algebra.ConstantSet | None = None) -> np.ndarray:
    TT = algebra.transform_TT() if consts is None else consts.TT
    return apply_matrix(TT.conj().T, psi)


def psi_to_phi(psi) -> np.ndarray:
    return apply_matrix(algebra.transform_Sphi(), psi)


def phi_to_psi(phi) -> np.ndarray:
    return apply_matrix(algebra.transform_Sphi().T, phi)


def em_to_psi(em: EMState, med: MediumFrame) -> np.ndarray:
    return F_to_psi(em_to_F(em, med))


def psi_to_em(psi, med: MediumFrame, t: float = 0.0) -> EMState:
    return F_to_em(psi_to_F(psi), med, t)


# --- sources -------------------------------------------------------------------

def sources_to_calJ(src: SourceState, med: MediumFrame) -> np.ndarray:
    """Source in the F representation: ``(J, 0, 0, 0, 0, -v rho) / sqrt(2 eps)``."""
    _match(med.grid, src.J, src.rho)
    out = np.zeros((8,) + med.grid.shape, dtype=complex)
    out[0:3] = src.J
    out[7] = -med.v * src.rho
    return out / np.sqrt(2 * med.eps)


def sources_to_frak(src: SourceState, med: MediumFrame) -> np.ndarray:
    """Source in the Psi representation, written out component by component."""
    _match(med.grid, src.J, src.rho)
    Jx, Jy, Jz = src.J
    vr = med.v * src.rho
    out = np.stack([
        -Jx + 1j * Jy, Jz + vr, Jz - vr, Jx + 1j * Jy,
        -Jx - 1j * Jy, Jz + vr, Jz - vr, Jx - 1j * Jy,
    ])
    return out / (2 * np.sqrt(2 * med.eps))


# --- energy ----------------------------------------------------------------------

def energy_density(f) -> np.ndarray:
    """Pointwise ``|f|^2``; equals ``(eps |E|^2 + |B|^2 / mu) / 2`` for an F state.

    Unitary changes of representation leave it unchanged, so Psi and Phi
    states may be passed directly.
    """
    return np.sum(np.abs(np.asarray(f)) ** 2, axis=0)


def energy(f, grid: Grid) -> float:
    return float(grid.integrate(energy_density(f)).real)


def em_energy(em: EMState, med: MediumFrame) -> float:
    """Direct quadrature of ``(eps |E|^2 + |B|^2 / mu) / 2``; no 8-vector involved."""
    dens = 0.5 * (med.eps * np.sum(np.abs(em.E) ** 2, axis=0) + np.sum(np.abs(em.B) ** 2, axis=0) / med.mu)
    return float(med.grid.integrate(dens).real)


# --- plane waves ---------------------------------------------------------------

def project_transverse(k, E0) -> np.ndarray:
    """Remove the component of ``E0`` along ``k``."""
    k = np.asarray(k, dtype=float)
    E0 = np.asarray(E0, dtype=complex)
    kk = np.dot(k, k)
    if kk == 0:
        return E0
    return E0 - k * np.dot(k, E0) / kk


def make_plane_wave(grid: Grid, k, E0, med: MediumFrame, t: float = 0.0) -> EMState:
    """``E = E0 exp(i k.r)``, ``B = (k_hat x E0 / v) exp(i k.r)`` in a constant medium.

    Any part of ``E0`` along ``k`` is projected out first.
    """
    if not med.is_constant:
        raise ValueError("plane waves need a constant medium")
    k = np.asarray(k, dtype=float)
    if not np.any(k):
        raise ValueError("plane wave needs a nonzero wavevector")
    if not grid.is_resolved(k):
        raise ValueError(f"wavevector {k.tolist()} is not a mode of the {grid.shape} grid")
    E0 = project_transverse(k, E0)
    if np.linalg.norm(E0) < 1e-12 * max(1.0, np.linalg.norm(k)):
        raise ValueError("E0 is parallel to k; nothing is left after removing the longitudinal part")
    v = med.speed()
    B0 = np.cross(k / np.linalg.norm(k), E0) / v
    x, y, z = grid.coords
    phase = np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))
    return EMState(E0[:, None, None, None] * phase, B0[:, None, None, None] * phase, t)


def plane_wave_amplitudes(k, E0, eps: float, mu: float):
    """RSW amplitudes ``F0+-`` of a plane wave with electric amplitude ``E0``."""
    k = np.asarray(k, dtype=float)
    E0 = project_transverse(k, E0)
    v = 1 / np.sqrt(eps * mu)
    B0 = np.cross(k / np.linalg.norm(k), E0) / v
    s = np.sqrt(eps / 2)
    return s * (E0 + 1j * v * B0), s * (E0 - 1j * v * B0)


def transversality_residuals(k, F0p, F0m) -> dict[str, float]:
    """``k.F0+-`` and ``|k| F0+- -+ i (k x F0+-)``."""
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    return {
        "k.F+": float(abs(np.dot(k, F0p))),
        "k.F-": float(abs(np.dot(k, F0m))),
        "kF+ = +i k x F+": float(np.abs(kn * F0p - 1j * np.cross(k, F0p)).max()),
        "kF- = -i k x F-": float(np.abs(kn * F0m + 1j * np.cross(k, F0m)).max()),
    }


def divergence_free_em(grid: Grid, med: MediumFrame, rng=None, kmax_fraction: float = 0.25) -> EMState:
    """Random band-limited real state with spectrally divergence-free ``D = eps E`` and ``B``.

    ``D`` and ``B`` are curls of random vector potentials, so Gauss's laws
    hold to roundoff and the null slots stay quiet during evolution.
    """
    rng = np.random.default_rng(rng)
    A = random_bandlimited(grid, 3, kmax_fraction, rng, real=True)
    C = random_bandlimited(grid, 3, kmax_fraction, rng, real=True)
    D = grid.curl(A).real
    B = grid.curl(C).real
    return EMState(D / med.eps, B)

