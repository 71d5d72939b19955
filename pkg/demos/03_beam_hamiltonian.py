"""Beam-optics split of the Hamiltonian in a weak graded-index fiber.

Checks that the even part commutes with beta, the odd part anticommutes,
and prints the size of the refractive (n - n0) part.
"""

from rswmaxwell.config import load_config
from rswmaxwell.runner import run_beam
from pathlib import Path

cfg = load_config(Path(__file__).parents[1] / "tests" / "fixtures" / "configs" / "beam_fiber.yaml")
rep = run_beam(cfg)
for key in ("BE_minus_EB", "BO_plus_OB", "monochromatic_residual", "refractive_part"):
    print(key, rep[key])
print("failed:", rep["failed"] or "none")
