"""Seeded verification suites over the constant matrices, the operators and the propagators.

Each check produces ``{"check_name", "norm", "tolerance", "pass"}``.  The
suites take a :class:`~rswmaxwell.algebra.ConstantSet`; the matrix-level
identities and every representation change inside the operator and
evolution suites read from it, so corrupting a single entry shows up as
named failures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import algebra as al
from . import evolve as ev
from . import fields as fl
from . import operators as op
from .grid import Grid, random_bandlimited
from .medium import MediumSpec, sample

SCOPES = ("algebra", "operators", "evolution", "all")

EXACT = al.EXACT_TOL


@dataclass
class Check:
    name: str
    norm: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.norm) and self.norm <= self.tolerance)

    def to_dict(self) -> dict:
        return {"check_name": self.name, "norm": float(self.norm),
                "tolerance": float(self.tolerance), "pass": self.passed}


def _mx(a) -> float:
    return float(np.abs(np.asarray(a)).max())


def _rel(a, b) -> float:
    scale = max(_mx(a), _mx(b))
    return 0.0 if scale == 0 else _mx(np.asarray(a) - np.asarray(b)) / scale


def _rel2(a, b) -> float:
    nb = np.linalg.norm(np.ravel(b))
    return float(np.linalg.norm(np.ravel(np.asarray(a) - b)) / nb)


# --- algebra ----------------------------------------------------------------------

def algebra_checks(c: al.ConstantSet) -> list[Check]:
    out = []
    add = out.append
    I2, I4, I8 = np.eye(2), np.eye(4), np.eye(8)
    sx, sy, sz = c.sigma
    for ax, s in zip(al.AXES, c.sigma):
        add(Check(f"pauli_square_{ax}", _mx(s @ s - I2), EXACT))
        add(Check(f"pauli_hermitian_{ax}", _mx(s - s.conj().T), EXACT))
    for (a, b), (p, q) in zip(("xy", "yz", "zx"), ((0, 1), (1, 2), (2, 0))):
        s, t = c.sigma[p], c.sigma[q]
        add(Check(f"pauli_anticommute_{a}{b}", _mx(s @ t + t @ s), EXACT))
    add(Check("pauli_triple_product", _mx(sx @ sy @ sz - 1j * I2), EXACT))

    kron_forms = (al.kron(sy, sy, sx), -al.kron(sy, sy, sz), al.kron(sy, I2, sy))
    for ax, m, kf in zip(al.AXES, c.m0, kron_forms):
        add(Check(f"M0{ax}_printed", _mx(m - al.PRINTED[f"M0{ax}"]), EXACT))
        add(Check(f"M0{ax}_kron_form", _mx(m - kf), EXACT))
        add(Check(f"M0{ax}_square", _mx(m @ m - I8), EXACT))
        add(Check(f"M0{ax}_real", _mx(m.imag), EXACT))
    for (a, b), (p, q) in zip(("xy", "yz", "zx"), ((0, 1), (1, 2), (2, 0))):
        m, n = c.m0[p], c.m0[q]
        add(Check(f"m0_anticommute_{a}{b}", _mx(m @ n + n @ m), EXACT))
    add(Check("M0_triple_product", _mx(c.m0[0] @ c.m0[1] @ c.m0[2] - 1j * al.kron(sy, I4)), EXACT))

    add(Check("tau_formula", _mx(c.tau - (I2 + 1j * sx) / np.sqrt(2)), EXACT))
    add(Check("tau_unitary", al.unitarity_error(c.tau), EXACT))
    add(Check("tau_sigma_y", _mx(c.tau @ sy @ c.tau.conj().T + sz), EXACT))
    add(Check("T8_kron_form", _mx(c.T8 - al.kron(c.tau, I4)), EXACT))
    add(Check("T8_printed", _mx(c.T8 - al.PRINTED["T8"]), EXACT))
    add(Check("T8_unitary", al.unitarity_error(c.T8), EXACT))
    add(Check("T_printed", _mx(c.T - al.PRINTED["T"]), EXACT))
    add(Check("T_unitary", al.unitarity_error(c.T), EXACT))
    add(Check("TT_product", _mx(c.TT - c.T @ c.T8), EXACT))
    add(Check("TT_printed", _mx(c.TT - al.PRINTED["TT"]), EXACT))
    add(Check("TT_unitary", al.unitarity_error(c.TT), EXACT))
    for ax, m in zip(al.AXES, c.m0):
        j = al.AXES.index(ax)
        target = -np.block([[al.big_sigma(j), np.zeros((4, 4))], [np.zeros((4, 4)), al.big_sigma(j, True)]])
        add(Check(f"reduction_{ax}", _mx(c.TT @ m @ c.TT.conj().T - target), EXACT))
    for name in ("SK", "SphiK", "Sphi"):
        m = c.get(name)
        add(Check(f"{name}_permutation", 0.0 if al.is_permutation(m) else 1.0, EXACT))
        add(Check(f"{name}_unitary", al.unitarity_error(m), EXACT))
    add(Check("SK_printed", _mx(c.SK - al.PRINTED["SK"]), EXACT))
    add(Check("Sphi_product", _mx(c.Sphi - c.SphiK @ c.SK), EXACT))
    add(Check("Sphi_printed", _mx(c.Sphi - al.PRINTED["Sphi"]), EXACT))
    add(Check("beta_kron_form", _mx(c.beta - al.kron(sz, I4)), EXACT))
    add(Check("beta_involution", _mx(c.beta @ c.beta - I8), EXACT))
    return out


# --- operators --------------------------------------------------------------------

SMOOTH_N = "1.5*exp(0.1*sin(2*pi*x) + 0.05*cos(2*pi*z) + 0.05*sin(2*pi*y))"
SMOOTH_ETA = "exp(0.08*cos(2*pi*y) + 0.05*sin(2*pi*z))"


def smooth_medium(grid: Grid, t_dependent: bool = False) -> MediumSpec:
    """The smooth 3-D test medium used by the suites (optionally with time variation)."""
    n = SMOOTH_N + ("*(1 + 0.05*sin(3*t))" if t_dependent else "")
    return MediumSpec.analytic_n_eta(n, SMOOTH_ETA)


def operator_checks(c: al.ConstantSet, seed: int = 0, n_states: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    add = out.append
    g = Grid((12, 12, 12))
    v = 0.8
    const = sample(MediumSpec.constant(1.0 / v, 1.0 / v), g)
    smooth = sample(smooth_medium(g), g)
    moving = sample(smooth_medium(g, True), g, 0.3)

    def rand(ncomp):
        return random_bandlimited(g, ncomp, 0.25, rng)

    def worst(fn):
        return max(fn() for _ in range(n_states))

    f = rand(8)
    lap = np.stack([g.laplacian(x) for x in f])
    add(Check("M0_F_squared_is_laplacian", _rel(op.apply_M0_F(op.apply_M0_F(f, v, g, c), v, g, c), v**2 * lap), 1e-10))

    k = g.wavevector([1, -2, 1])
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    x, y, z = g.coords
    wave = a[:, None, None, None] * np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))
    mk = 1j * v * sum(k[j] * al.PRINTED[f"M0{ax}"] for j, ax in enumerate(al.AXES))
    add(Check("M0_F_mode_matrix", _rel(op.apply_M0_F(wave, v, g, c), fl.apply_matrix(mk, wave)), 1e-12))

    def antiherm():
        f1, f2 = rand(8), rand(8)
        lhs = g.inner(f1, op.apply_M0_F(f2, v, g, c))
        rhs = -g.inner(op.apply_M0_F(f1, v, g, c), f2)
        return abs(lhs - rhs) / (g.norm(f1) * g.norm(op.apply_M0_F(f2, v, g, c)))
    add(Check("M0_F_antihermitian", worst(antiherm), 1e-10))

    def reduction():
        psi = rand(8)
        lhs = fl.F_to_psi(op.apply_M0_F(fl.psi_to_F(psi, c), v, g, c), c)
        return _rel(lhs, op.apply_M0_psi(psi, v, g))
    add(Check("reduction_block_diagonal", worst(reduction), 1e-12))

    add(Check("M_F_constant_is_M0", _rel(op.apply_M_F(f, const), op.apply_M0_F(f, v, g, c)), 1e-13))

    for label, med in (("static", smooth), ("time_dependent", moving)):
        psi = rand(8)
        a_em = op.apply_M_psi(psi, med, "eps_mu")
        add(Check(f"Mprime_forms_agree_{label}", _rel(a_em, op.apply_M_psi(psi, med, "n_eta")), 1e-12))
        sim = fl.F_to_psi(op.apply_M_F(fl.psi_to_F(psi, c), med), c)
        add(Check(f"M_psi_similarity_{label}", _rel(a_em, sim), 1e-12))

    psi = rand(8)
    mpsi = op.apply_M_psi(psi, smooth)
    add(Check("M_phi_similarity", _rel(op.apply_M_phi(fl.psi_to_phi(psi), smooth), fl.psi_to_phi(mpsi)), 1e-12))
    add(Check("H_split_equals_M", _rel(op.hamiltonian(psi, smooth), mpsi), 1e-13))
    add(Check("khan_round_trip", _rel(op.from_khan(op.to_khan(psi)), psi), EXACT))

    g16 = Grid((16, 16, 16))
    med16 = sample(smooth_medium(g16), g16)
    E = random_bandlimited(g16, 3, 0.25, rng, real=True)
    lhs = op.helmholtz_lhs(E, med16)
    add(Check("generalized_helmholtz_grad_form", _rel(lhs, op.helmholtz_rhs(E, med16, "grad")), 1e-8))
    add(Check("generalized_helmholtz_log_form", _rel(lhs, op.helmholtz_rhs(E, med16, "log")), 1e-8))

    em = fl.divergence_free_em(g16, med16, rng)
    rate = op.apply_M_F(fl.em_to_F(em, med16), med16)
    add(Check("null_slots_preserved", fl.null_norm(rate) / _mx(rate), 1e-10))

    mb = op.m_blocks(med16)
    u = random_bandlimited(g16, 2, 0.25, rng)
    add(Check("m_blocks_sigma", _rel(mb.compose(u), mb.formula(u)), 1e-9))
    add(Check("m_blocks_sigma_conj", _rel(mb.compose(u, True), mb.formula(u, True)), 1e-9))

    bh = op.beam_hamiltonian(op.BeamContext(0.3, 1.5), smooth)
    be = bo = mono = 0.0
    for _ in range(n_states):
        phi = rand(8)
        e_c, o_c = bh.commutators(phi)
        be, bo = max(be, _mx(e_c)), max(bo, _mx(o_c))
        mono = max(mono, bh.monochromatic_residual(phi))
    add(Check("beam_B_commutes_with_E", be, 1e-13))
    add(Check("beam_B_anticommutes_with_O", bo, 1e-13))
    add(Check("beam_monochromatic_reduction", mono, 1e-10))
    return out


# --- evolution ---------------------------------------------------------------------

def evolution_checks(c: al.ConstantSet, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    add = out.append
    g = Grid((8, 8, 8))
    vac = sample(MediumSpec.constant(), g)

    def wave(k, e0, med=vac, grid=g):
        return fl.F_to_psi(fl.em_to_F(fl.make_plane_wave(grid, k, e0, med), med), c)

    p = wave(g.wavevector([0, 0, 1]), [1, 0, 0])
    add(Check("psi_duplicate_slots", fl.duplicate_residual(p), 1e-12))
    add(Check("exact_full_period", _rel(ev.evolve_exact(p, 1.0, 1.0, g), p), 1e-12))

    def superposition(grid, med, count=5, mmax=2):
        tot = 0
        for _ in range(count):
            m = rng.integers(-mmax, mmax + 1, size=3)
            while not m.any():
                m = rng.integers(-mmax, mmax + 1, size=3)
            e0 = rng.normal(size=3) + 1j * rng.normal(size=3)
            tot = tot + wave(grid.wavevector(m), e0, med, grid)
        return tot

    s = superposition(g, vac)
    add(Check("exact_identity_at_t0", _rel(ev.evolve_exact(s, 1.0, 0.0, g), s), 1e-15))
    back = ev.evolve_exact(ev.evolve_exact(s, 1.0, 0.7, g), 1.0, -0.7, g)
    add(Check("exact_reversibility", _rel(back, s), 1e-12))
    e0 = fl.energy(fl.psi_to_F(s, c), g)
    e1 = fl.energy(fl.psi_to_F(ev.evolve_exact(s, 1.0, 10.0, g), c), g)
    add(Check("exact_energy_10_periods", abs(e1 - e0) / e0, 1e-12))

    worst = 0.0
    for m in ([1, 0, 0], [1, 2, -1], [3, 3, -3]):
        k = g.wavevector(m)
        amp = rng.normal(size=8) + 1j * rng.normal(size=8)
        x, y, z = g.coords
        ph = amp[:, None, None, None] * np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))
        want = fl.apply_matrix(expm(0.37 * ev.mode_generator(k, 0.6)), ph)
        worst = max(worst, _rel(ev.evolve_exact(ph, 0.6, 0.37, g), want))
    add(Check("exact_vs_matrix_exponential", worst, 1e-12))

    rows = ev.dispersion_scan(g, [g.wavevector(m) for m in
                                  ([0, 0, 1], [1, 0, 0], [0, 1, 1], [1, 2, 3], [2, 2, 1],
                                   [3, 0, 1], [1, 1, 1], [3, 0, 0], [2, 3, 3], [1, 3, 2])], 0.5)
    add(Check("dispersion_10_modes", max(r.rel_err for r in rows), 1e-10))

    k = g.wavevector([1, 2, 0])
    Fp, Fm = fl.plane_wave_amplitudes(k, [0.3, -0.2, 1.0], 1.0, 1.0)
    add(Check("transversality", max(fl.transversality_residuals(k, Fp, Fm).values()), 1e-12))

    s0 = fl.F_to_psi(fl.em_to_F(fl.divergence_free_em(g, vac, rng), vac), c)
    st = ev.evolve_exact(s0, 1.0, 0.4, g)
    rate = ev.exact_rate(s0, 1.0, 0.4, g)
    Fp, Fm = fl.psi_to_rsw(st)
    dFp, dFm = fl.psi_to_rsw(rate)
    add(Check("rsw_maxwell_source_free", max(_rel2(dFp, -1j * g.curl(Fp)), _rel2(dFm, 1j * g.curl(Fm))), 1e-8))
    add(Check("rsw_divergence_free", max(_mx(g.div(Fp)), _mx(g.div(Fm))) / _mx(Fp), 1e-12))
    add(Check("rsw_real_field_conjugacy", _rel(Fm, Fp.conj()), 1e-10))

    g1 = Grid((1, 1, 128))
    vac1 = sample(MediumSpec.constant(), g1)
    s1 = wave(g1.wavevector([0, 0, 1]), [1, 0.5, 0], vac1, g1) + wave(g1.wavevector([0, 0, -1]), [0.2, 1j, 0], vac1, g1)
    plan = ev.PropagatorPlan(steps=100, cfl=0.25)
    r, _ = ev.evolve_rk4(s1, MediumSpec.constant(), g1, plan)
    dt = plan.resolve_dt(g1, 1.0)
    add(Check("rk4_vs_exact_100_steps", _rel2(r, ev.evolve_exact(s1, 1.0, 100 * dt, g1)), 1e-8))
    z, _ = ev.evolve_rk4(np.zeros_like(s1), MediumSpec.constant(), g1, ev.PropagatorPlan(steps=10))
    add(Check("rk4_zero_stays_zero", _mx(z), 0.0))
    return out


def run_checks(scope: str = "all", seed: int = 0, consts: al.ConstantSet | None = None) -> list[Check]:
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; choose from {', '.join(SCOPES)}")
    consts = consts or al.ConstantSet()
    checks = []
    if scope in ("algebra", "all"):
        checks += algebra_checks(consts)
    if scope in ("operators", "all"):
        checks += operator_checks(consts, seed)
    if scope in ("evolution", "all"):
        checks += evolution_checks(consts, seed)
    return checks


def report(checks, scope: str, seed: int) -> dict:
    failed = [ch.name for ch in checks if not ch.passed]
    return {"scope": scope, "seed": seed, "passed": not failed, "failed": failed,
            "checks": [ch.to_dict() for ch in checks]}


def report_json(checks, scope: str, seed: int) -> str:
    return json.dumps(report(checks, scope, seed), indent=2, sort_keys=True) + "\n"


def format_table(checks) -> str:
    width = max(len(ch.name) for ch in checks)
    lines = [f"{'check'.ljust(width)}  {'norm':>10}  {'tol':>8}  result"]
    for ch in checks:
        lines.append(f"{ch.name.ljust(width)}  {ch.norm:10.3e}  {ch.tolerance:8.1e}  {'PASS' if ch.passed else 'FAIL'}")
    return "\n".join(lines)


def load_mutation(path) -> dict:
    """Read a mutation fixture: ``{"matrix", "row", "col", "value" (optional), "expect_failed"}``."""
    with open(path) as fh:
        spec = json.load(fh)
    for key in ("matrix", "row", "col"):
        if key not in spec:
            raise ValueError(f"mutation fixture {path} lacks {key!r}")
    return spec


def mutated_constants(spec: dict) -> al.ConstantSet:
    value = spec.get("value")
    if isinstance(value, list):
        value = complex(*value)
    return al.ConstantSet().mutated(spec["matrix"], int(spec["row"]), int(spec["col"]), value)
