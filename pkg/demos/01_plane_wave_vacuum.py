"""A vacuum plane wave carried by the 8-component state.

Builds E, B for one Fourier mode, maps them into the psi representation,
and compares the exact k-space propagator with RK4 after one period.
"""

import numpy as np

from rswmaxwell import evolve as ev
from rswmaxwell import fields as fl
from rswmaxwell.grid import Grid
from rswmaxwell.medium import MediumSpec, sample

g = Grid((4, 4, 128))
spec = MediumSpec.constant()
med = sample(spec, g)
k = g.wavevector([0, 0, 1])
em = fl.make_plane_wave(g, k, [1, 0, 0], med)
psi0 = fl.em_to_psi(em, med)

Fp, Fm = fl.psi_to_rsw(psi0)
print("|F+| max", np.abs(Fp).max(), " |F-| max", np.abs(Fm).max())
print("null slots", fl.null_norm(fl.psi_to_F(psi0)))

period = 2 * np.pi / np.linalg.norm(k)
exact = ev.evolve_exact(psi0, 1.0, period, g)
print("exact propagator, one period: |psi(T) - psi(0)| / |psi(0)| =",
      np.linalg.norm(exact - psi0) / np.linalg.norm(psi0))

steps = 512
psi, rec = ev.evolve_rk4(psi0, spec, g, ev.PropagatorPlan(steps=steps, dt=period / steps, diag_every=128))
print("RK4, 512 steps:  phase error", np.linalg.norm(psi - exact) / np.linalg.norm(exact),
      " energy drift", rec.energy_drift())
