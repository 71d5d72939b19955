"""Configured runs: build the initial state, evolve, scan dispersion, check the beam Hamiltonian.

Each ``run_*`` function returns a plain summary dict and writes its files
into ``outdir`` when one is given.  The command line wraps these.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import evolve as ev
from . import fields as fl
from . import io
from . import operators as op
from .config import ConfigError, RunConfig, source_function, wavevector
from .grid import random_bandlimited
from .medium import sample


def _periodic_offset(coord, centre, length):
    d = coord - centre
    return d - length * np.round(d / length)


def gaussian_packet(cfg: RunConfig, med) -> fl.EMState:
    """Transverse Gaussian packet ``E0 exp(-r^2 / 2w^2 + i k0.r)`` with Gauss's laws exact.

    The packet is made divergence-free mode by mode and used as ``D / mean(eps)``;
    ``B`` gets the forward plane-wave relation ``k_hat x D / (mean(eps) mean(v))``.
    """
    g = cfg.grid
    ini = cfg.initial
    x, y, z = g.coords
    r2 = sum(_periodic_offset(c, c0, L) ** 2 for c, c0, L in zip((x, y, z), ini["center"], g.lengths))
    k0 = np.asarray(ini["k0"])
    env = np.exp(-r2 / (2 * ini["width"] ** 2) + 1j * (k0[0] * x + k0[1] * y + k0[2] * z))
    E0 = np.asarray(ini["E0"], dtype=complex)
    ah = g.fft(E0[:, None, None, None] * env)
    kx, ky, kz = g.k
    k2 = np.where(g.k2 > 0, g.k2, 1.0)
    kdot = (kx * ah[0] + ky * ah[1] + kz * ah[2]) / k2
    ah = ah - np.stack([kx * kdot, ky * kdot, kz * kdot])
    ah[:, g.k2 == 0] = 0
    kn = np.sqrt(k2)
    bh = np.stack([ky * ah[2] - kz * ah[1], kz * ah[0] - kx * ah[2], kx * ah[1] - ky * ah[0]]) / kn
    eps_ref, v_ref = float(np.mean(med.eps)), float(np.mean(med.v))
    D = eps_ref * g.ifft(ah)
    B = g.ifft(bh) / v_ref
    return fl.EMState(D / med.eps, B)


def initial_state(cfg: RunConfig, med) -> fl.EMState:
    ini = cfg.initial
    kind = ini["kind"]
    if kind == "zero":
        return fl.EMState.zeros(cfg.grid)
    if kind == "plane_wave":
        if not med.is_constant:
            raise ConfigError("initial.plane_wave: plane waves need a constant medium")
        try:
            return fl.make_plane_wave(cfg.grid, wavevector(cfg), ini["E0"], med)
        except ValueError as exc:
            raise ConfigError(f"initial.plane_wave: {exc}") from None
    if kind == "gaussian_packet":
        return gaussian_packet(cfg, med)
    if kind == "random":
        return fl.divergence_free_em(cfg.grid, med, np.random.default_rng(cfg.seed), ini["kmax_fraction"])
    state, g, meta = io.read_state(ini["path"])
    if g.shape != cfg.grid.shape:
        raise ConfigError(f"initial.file: state grid {g.shape} does not match grid.n {cfg.grid.shape}")
    rep = meta["representation"]
    if rep == "em":
        return fl.EMState(state[0:3], state[3:6])
    if rep == "F":
        return fl.F_to_em(state, med)
    if rep == "phi":
        state = fl.phi_to_psi(state)
    return fl.psi_to_em(state, med)


def _plan(cfg: RunConfig) -> ev.PropagatorPlan:
    p = cfg.propagator
    return ev.PropagatorPlan(p["kind"], p["steps"], p["dt"], p["cfl"], p["diag_every"])


def run_evolve(cfg: RunConfig, outdir=None, oracle: bool | None = None) -> dict:
    """Evolve the configured state; returns a summary with energy drift and constraint residuals."""
    oracle = cfg.oracle if oracle is None else oracle
    g = cfg.grid
    spec = cfg.medium
    med0 = sample(spec, g, 0.0)
    em0 = initial_state(cfg, med0)
    psi0 = fl.em_to_psi(em0, med0)
    plan = _plan(cfg)
    src = source_function(cfg)
    out = Path(outdir) if outdir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    if plan.kind == "exact_kspace":
        if not spec.is_constant:
            raise ConfigError("propagator.kind: exact_kspace needs a constant medium")
        if src is not None:
            raise ConfigError("propagator.kind: exact_kspace is source-free")
        v = spec.speed()
        dt = plan.resolve_dt(g, v)
        record = ev.RunRecord()
        every = plan.diag_every or max(plan.steps, 1)
        for step in range(0, plan.steps + 1):
            if step % every == 0 or step == plan.steps:
                record.add(step * dt, ev.diagnostics(ev.evolve_exact(psi0, v, step * dt, g), med0))
        psi = ev.evolve_exact(psi0, v, plan.steps * dt, g)
    else:
        snaps = cfg.output["snapshot_every"]
        if snaps and out:
            psi, record, dt = _rk4_with_snapshots(psi0, cfg, plan, src, out, snaps)
        else:
            psi, record = ev.evolve_rk4(psi0, spec, g, plan, src, form=cfg.propagator["form"])
            dt = plan.resolve_dt(g, float(np.max(med0.v)))
    t_end = plan.steps * dt

    diag = record.diagnostics
    summary = {
        "steps": plan.steps, "dt": dt, "t_end": t_end,
        "energy_initial": diag[0]["energy"], "energy_final": diag[-1]["energy"],
        "energy_drift": record.energy_drift(),
        "max_constraint_residual": max(max(d["div_D_residual"], d["div_B_residual"]) for d in diag),
        "max_null_norm": max(d["null_norm"] for d in diag),
    }
    if spec.is_constant and cfg.initial["kind"] == "plane_wave" and src is None:
        exact = ev.evolve_exact(psi0, spec.speed(), t_end, g)
        summary["phase_error"] = float(np.linalg.norm(psi - exact) / np.linalg.norm(exact))
    if oracle:
        if plan.kind != "rk4":
            summary["oracle_diff"] = None
        else:
            ref = ev.reference_curl_solver(em0, spec, g, plan, src)
            ref_psi = fl.em_to_psi(ref, sample(spec, g, t_end))
            nrm = np.linalg.norm(ref_psi)
            summary["oracle_diff"] = float(np.linalg.norm(psi - ref_psi) / nrm) if nrm else float(np.linalg.norm(psi))

    tol = cfg.tolerances
    failures = []
    if summary["energy_drift"] > tol["energy_drift"] and src is None and not spec.time_dependent:
        failures.append("energy_drift")
    if summary.get("phase_error", 0.0) > tol["phase_error"]:
        failures.append("phase_error")
    if summary.get("oracle_diff") is not None and summary["oracle_diff"] > tol["oracle"]:
        failures.append("oracle_diff")
    summary["failed"] = failures

    if out:
        io.write_state(out / "state_final.bin", psi, g, "psi", t_end, cfg.units)
        (out / "run_record.jsonl").write_text(record.to_jsonl())
        if cfg.output["slice_csv"]:
            io.write_slice_csv(out / "slice_final.csv", fl.psi_to_F(psi), g)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _rk4_with_snapshots(psi0, cfg, plan, src, out, every):
    """Evolve in chunks of ``every`` steps, writing a snapshot after each chunk."""
    g = cfg.grid
    dt = plan.resolve_dt(g, float(np.max(sample(cfg.medium, g, 0.0).v)))
    psi, t, done = psi0, 0.0, 0
    record = ev.RunRecord()
    io.write_state(out / "state_000000.bin", psi, g, "psi", 0.0, cfg.units)
    while done < plan.steps:
        n = min(every, plan.steps - done)
        chunk = ev.PropagatorPlan("rk4", n, dt, plan.cfl, plan.diag_every)
        try:
            psi, rec = ev.evolve_rk4(psi, cfg.medium, g, chunk, src, t0=t, form=cfg.propagator["form"])
        except ev.RunAbort as exc:
            raise ev.RunAbort(done + exc.step, exc.t) from None
        start = 1 if record.diagnostics else 0
        for d in rec.diagnostics[start:]:
            record.add(d["t"], {k: val for k, val in d.items() if k != "t"})
        done += n
        t = done * dt
        io.write_state(out / f"state_{done:06d}.bin", psi, g, "psi", t, cfg.units)
    return psi, record, dt


def run_dispersion(cfg: RunConfig, outdir=None) -> dict:
    if not cfg.medium.is_constant:
        raise ConfigError("medium: the dispersion scan needs a constant medium")
    g = cfg.grid
    modes = [g.wavevector(m) for m in cfg.dispersion["modes"]]
    for m, k in zip(cfg.dispersion["modes"], modes):
        if not g.is_resolved(k):
            raise ConfigError(f"dispersion.modes: {m} is not below Nyquist on the {g.shape} grid")
    rows = ev.dispersion_scan(g, modes, cfg.medium.speed(), samples=cfg.dispersion["samples"])
    csv_text = ev.dispersion_csv(rows)
    worst = max(r.rel_err for r in rows)
    if outdir:
        Path(outdir).mkdir(parents=True, exist_ok=True)
        (Path(outdir) / "dispersion.csv").write_text(csv_text)
    return {"csv": csv_text, "max_rel_err": worst, "tolerance": cfg.tolerances["dispersion"],
            "failed": ["dispersion"] if worst > cfg.tolerances["dispersion"] else []}


def run_beam(cfg: RunConfig, seed: int | None = None, outdir=None) -> dict:
    spec = cfg.medium
    if spec.time_dependent:
        raise ConfigError("medium: the beam Hamiltonian needs a time-independent medium")
    if cfg.source is not None:
        raise ConfigError("source: the beam Hamiltonian is source-free")
    g = cfg.grid
    med = sample(spec, g)
    n0 = cfg.beam["n0"] if cfg.beam["n0"] is not None else float(np.mean(med.n))
    ctx = op.BeamContext(cfg.beam["wavelength"], n0, med.c)
    bh = op.beam_hamiltonian(ctx, med)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    be = bo = mono = refr = 0.0
    for _ in range(cfg.beam["states"]):
        phi = random_bandlimited(g, 8, 0.25, rng)
        e_c, o_c = bh.commutators(phi)
        be = max(be, float(np.abs(e_c).max()))
        bo = max(bo, float(np.abs(o_c).max()))
        mono = max(mono, bh.monochromatic_residual(phi))
        refr = max(refr, float(np.abs(bh.refractive_part(phi)).max()))
    tol = cfg.tolerances
    rep = {
        "n0": n0, "wavelength": ctx.wavelength, "omega": ctx.omega, "states": cfg.beam["states"],
        "BE_minus_EB": {"norm": be, "tolerance": tol["commutation"]},
        "BO_plus_OB": {"norm": bo, "tolerance": tol["commutation"]},
        "monochromatic_residual": {"norm": mono, "tolerance": tol["monochromatic"]},
        "refractive_part": {"norm": refr, "homogeneous": bool(np.ptp(med.n) == 0)},
    }
    failed = [k for k in ("BE_minus_EB", "BO_plus_OB", "monochromatic_residual") if rep[k]["norm"] > rep[k]["tolerance"]]
    if rep["refractive_part"]["homogeneous"] and refr > tol["refractive_part"]:
        failed.append("refractive_part")
    rep["failed"] = failed
    if outdir:
        Path(outdir).mkdir(parents=True, exist_ok=True)
        (Path(outdir) / "beam_report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    return rep
