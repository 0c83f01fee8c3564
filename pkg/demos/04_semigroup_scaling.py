"""Decay of the heat semigroup from L^1 to L^q on a weighted lattice.

For w = 1 the operator norm of e^(-tL) from L^1 to L^q decays like
t^(-alpha) with alpha = (n/2)(1 - 1/q).  The weight |x|^(1/2) leaves the
rate unchanged on the time window where the lattice is neither too coarse
nor too small.
"""
from pathlib import Path

from degenlab.harness.config import load_config
from degenlab.harness.experiments import run_semigroup_scaling

configs = Path(__file__).resolve().parents[1] / "configs"
for name in ("scaling_p1_q2_flat", "scaling_p1_q4_flat", "scaling_p1_q4_half"):
    rep = run_semigroup_scaling(load_config(configs / f"{name}.toml"))
    for label, fit in rep.fits.items():
        print(f"{label}: slope {fit['slope']:.4f}, target {fit['target']:.4f}")
