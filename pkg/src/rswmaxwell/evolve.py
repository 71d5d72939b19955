"""Time evolution: exact per-mode propagator, RK4 driver, and an independent curl solver.

The curl solver steps ``D = eps E`` and ``B`` directly from the first-order
Maxwell equations.  It shares only the grid derivatives and medium sampling
with the rest of the package, so it serves as an oracle for the 8-component
evolution.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import fields as fl
from .grid import Grid
from .medium import MediumFrame, MediumSpec, sample, sample_eps_mu
from .operators import apply_M_psi

MAX_CFL = 0.5


class RunAbort(RuntimeError):
    """Evolution stopped because the state stopped being finite."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite values at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t


class PlanError(ValueError):
    pass


# --- exact propagator -----------------------------------------------------------

def _sigma_khat(a, b, kx, ky, kz, kn, conjugate):
    """``(sigma . k_hat)`` (or ``sigma*``) applied to the spinor ``(a, b)`` mode by mode."""
    with np.errstate(invalid="ignore", divide="ignore"):
        inv = np.where(kn > 0, 1.0 / np.where(kn > 0, kn, 1.0), 0.0)
    kt = kx + 1j * ky if conjugate else kx - 1j * ky
    return (kz * a + kt * b) * inv, (np.conj(kt) * a - kz * b) * inv


def _propagate_hat(ph, grid: Grid, v: float, t: float, rate: bool = False):
    kx, ky, kz = grid.k
    kn = np.sqrt(grid.k2)
    w = v * kn * t
    if rate:
        c, s = -v * kn * np.sin(w), v * kn * np.cos(w)
    else:
        c, s = np.cos(w), np.sin(w)
    out = np.empty_like(ph)
    for a, conj in ((0, False), (2, False), (4, True), (6, True)):
        sa, sb = _sigma_khat(ph[a], ph[a + 1], kx, ky, kz, kn, conj)
        out[a] = c * ph[a] - 1j * s * sa
        out[a + 1] = c * ph[a + 1] - 1j * s * sb
    return out


def evolve_exact(psi0: np.ndarray, v: float, t: float, grid: Grid) -> np.ndarray:
    """``exp(t M0) psi0`` with ``exp(-i v t Sigma.k) = cos(v|k|t) - i sin(v|k|t) Sigma.k_hat`` per mode."""
    if not v > 0:
        raise ValueError(f"speed must be positive, got {v!r}")
    grid.check(psi0)
    return grid.ifft(_propagate_hat(grid.fft(psi0), grid, v, t))


def exact_rate(psi0: np.ndarray, v: float, t: float, grid: Grid) -> np.ndarray:
    """Time derivative of :func:`evolve_exact` at ``t``, differentiated in closed form."""
    return grid.ifft(_propagate_hat(grid.fft(psi0), grid, v, t, rate=True))


def mode_generator(k, v: float) -> np.ndarray:
    """The 8x8 generator ``-i v (Sigma.k (+) Sigma*.k)`` of a single Fourier mode."""
    from .algebra import big_sigma
    s = sum(kj * big_sigma(j) for j, kj in enumerate(k))
    sc = sum(kj * big_sigma(j, conjugate=True) for j, kj in enumerate(k))
    z = np.zeros((4, 4), dtype=complex)
    return -1j * v * np.block([[s, z], [z, sc]])


# --- plans and records ------------------------------------------------------------

@dataclass
class PropagatorPlan:
    kind: str = "rk4"
    steps: int = 100
    dt: Optional[float] = None
    cfl: float = 0.25
    diag_every: int = 0

    def __post_init__(self):
        if self.kind not in ("rk4", "exact_kspace"):
            raise PlanError(f"unknown propagator kind {self.kind!r}")
        if self.steps < 0:
            raise PlanError(f"steps must be >= 0, got {self.steps}")
        if not 0 < self.cfl <= MAX_CFL:
            raise PlanError(f"cfl must lie in (0, {MAX_CFL}], got {self.cfl}")
        if self.dt is not None and not self.dt > 0:
            raise PlanError(f"dt must be positive, got {self.dt}")

    def resolve_dt(self, grid: Grid, vmax: float) -> float:
        """The step to use: the given one after a CFL check, or the largest allowed."""
        limit = self.cfl * grid.min_spacing / vmax
        if self.dt is None:
            return limit
        if self.dt > limit * (1 + 1e-12):
            raise PlanError(f"dt = {self.dt:.6g} violates the CFL limit {limit:.6g} "
                            f"(cfl {self.cfl}, dx_min {grid.min_spacing:.6g}, v_max {vmax:.6g})")
        return self.dt


@dataclass
class RunRecord:
    times: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def add(self, t: float, diag: dict):
        if self.times and t < self.times[-1]:
            raise ValueError("diagnostic times must be monotone")
        self.times.append(float(t))
        self.diagnostics.append(dict(diag, t=float(t)))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(d, sort_keys=True) + "\n" for d in self.diagnostics)

    def energy_drift(self) -> float:
        e = [d["energy"] for d in self.diagnostics]
        if not e or e[0] == 0:
            return 0.0
        return float(max(abs(x - e[0]) for x in e) / abs(e[0]))


def diagnostics(psi: np.ndarray, med: MediumFrame, src: fl.SourceState | None = None) -> dict:
    """Energy, Gauss-law residuals and null-slot size of a Psi state."""
    g = med.grid
    f = fl.psi_to_F(psi)
    em = fl.F_to_em(f, med)
    rho = 0 if src is None else src.rho
    div_d = g.div(med.eps * em.E) - rho
    div_b = g.div(em.B)
    return {
        "energy": fl.energy(psi, g),
        "div_D_residual": float(np.abs(div_d).max()),
        "div_B_residual": float(np.abs(div_b).max()),
        "null_norm": fl.null_norm(f),
    }


# --- RK4 -----------------------------------------------------------------------

def rk4_step(rhs: Callable, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + dt / 2, y + dt / 2 * k1)
    k3 = rhs(t + dt / 2, y + dt / 2 * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class _Frames:
    """Medium frames by time; a static medium is sampled once."""

    def __init__(self, spec: MediumSpec, grid: Grid):
        self.spec, self.grid = spec, grid
        self.static = not spec.time_dependent
        self._cache = {}

    def __call__(self, t: float) -> MediumFrame:
        key = 0.0 if self.static else float(t)
        if key not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = sample(self.spec, self.grid, key)
        return self._cache[key]


def _source_at(src, t):
    if src is None or isinstance(src, fl.SourceState):
        return src
    return src(t)


def evolve_rk4(psi0: np.ndarray, medium: MediumSpec, grid: Grid, plan: PropagatorPlan,
               src=None, t0: float = 0.0, form: str = "eps_mu"):
    """Step ``dPsi/dt = M Psi - J_psi`` with classical RK4.

    ``src`` may be ``None``, a fixed :class:`SourceState`, or a callable of
    time returning one.  Time-dependent media are re-sampled at every stage
    time.  Returns ``(psi, RunRecord)``.
    """
    grid.check(psi0)
    frames = _Frames(medium, grid)
    vmax = float(np.max(frames(t0).v))
    dt = plan.resolve_dt(grid, vmax)

    def rhs(t, y):
        return apply_M_psi(y, frames(t), form, _source_at(src, t))

    record = RunRecord()
    psi = np.array(psi0, dtype=complex)
    t = t0
    record.add(t, diagnostics(psi, frames(t), _source_at(src, t)))
    for step in range(1, plan.steps + 1):
        psi = rk4_step(rhs, psi, t, dt)
        t = t0 + step * dt
        if not np.all(np.isfinite(psi)):
            raise RunAbort(step, t)
        if not frames.static:
            vnow = float(np.max(frames(t).v))
            if dt > plan.cfl * grid.min_spacing / vnow * (1 + 1e-12):
                raise PlanError(f"medium speed grew past the CFL limit at step {step} (t = {t:.6g})")
        if plan.diag_every and (step % plan.diag_every == 0 or step == plan.steps):
            record.add(t, diagnostics(psi, frames(t), _source_at(src, t)))
    if not plan.diag_every and plan.steps:
        record.add(t, diagnostics(psi, frames(t), _source_at(src, t)))
    return psi, record


# --- reference solver -----------------------------------------------------------

def reference_curl_solver(em0: fl.EMState, medium: MediumSpec, grid: Grid, plan: PropagatorPlan,
                          src=None, t0: float = 0.0, on_step: Callable | None = None) -> fl.EMState:
    """Step ``dD/dt = curl(B/mu) - J``, ``dB/dt = -curl(D/eps)`` with RK4 and return ``E = D/eps``.

    ``on_step(step, t, D, B, eps, mu)`` is called after every step if given.
    """
    eps0, mu0 = sample_eps_mu(medium, grid, t0)
    vmax = float(np.max(1 / np.sqrt(eps0 * mu0)))
    dt = plan.resolve_dt(grid, vmax)
    static = not medium.time_dependent

    def eps_mu(t):
        return (eps0, mu0) if static else sample_eps_mu(medium, grid, t)

    def current(t):
        s = _source_at(src, t)
        return 0 if s is None else s.J

    def rhs(t, y):
        eps, mu = eps_mu(t)
        D, B = y[0:3], y[3:6]
        return np.concatenate([grid.curl(B / mu) - current(t), -grid.curl(D / eps)])

    y = np.concatenate([eps0 * em0.E, em0.B]).astype(complex)
    t = t0
    for step in range(1, plan.steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + step * dt
        if not np.all(np.isfinite(y)):
            raise RunAbort(step, t)
        if on_step is not None:
            on_step(step, t, y[0:3], y[3:6], *eps_mu(t))
    eps, _ = eps_mu(t)
    return fl.EMState(y[0:3] / eps, y[3:6], t)


def curl_energy(D, B, eps, mu, grid: Grid) -> float:
    return float(grid.integrate(0.5 * (np.sum(np.abs(D) ** 2, 0) / eps + np.sum(np.abs(B) ** 2, 0) / mu)).real)


# --- dispersion -------------------------------------------------------------------

@dataclass
class DispersionRow:
    k: tuple
    omega_measured: float
    omega_theory: float

    @property
    def rel_err(self) -> float:
        return abs(self.omega_measured - self.omega_theory) / self.omega_theory


def _default_polarisation(k):
    k = np.asarray(k, dtype=float)
    trial = np.eye(3)[int(np.argmin(np.abs(k)))]
    return np.cross(k, trial)


def dispersion_scan(grid: Grid, modes, v: float, E0=None, samples: int = 16):
    """Measure ``omega(k)`` of plane waves under :func:`evolve_exact` by fitting the phase slope.

    The sampling interval comes from the grid's largest wavenumber so the
    phase advance per sample stays below ``pi/2`` for every mode.
    """
    med = sample(MediumSpec.constant(1.0 / v, 1.0 / v), grid)
    dt = 0.5 * np.pi / (v * grid.k_max)
    times = dt * np.arange(samples)
    rows = []
    for k in modes:
        k = np.asarray(k, dtype=float)
        e0 = _default_polarisation(k) if E0 is None else np.asarray(E0, dtype=complex)
        if abs(np.dot(k, e0)) > 1e-12 * np.linalg.norm(k) * np.linalg.norm(e0):
            warnings.warn(f"polarisation {e0} is not transverse to k = {k}; projecting it", stacklevel=2)
        em = fl.make_plane_wave(grid, k, e0, med)
        psi0 = fl.em_to_psi(em, med)
        ph0 = grid.fft(psi0)
        idx = np.unravel_index(np.argmax(np.abs(ph0)), ph0.shape)
        z = [grid.fft(evolve_exact(psi0, v, t, grid))[idx] / ph0[idx] for t in times]
        phase = np.unwrap(np.angle(z))
        slope = np.polyfit(times, phase, 1)[0]
        rows.append(DispersionRow(tuple(k.tolist()), float(-slope), float(v * np.linalg.norm(k))))
    return rows


def dispersion_csv(rows) -> str:
    lines = ["kx,ky,kz,omega_measured,omega_theory,rel_err"]
    for r in rows:
        lines.append(",".join(repr(float(x)) for x in (*r.k, r.omega_measured, r.omega_theory, r.rel_err)))
    return "\n".join(lines) + "\n"
