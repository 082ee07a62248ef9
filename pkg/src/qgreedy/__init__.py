"""qgreedy: iterative greedy optimization of Ising objectives driven by
sampled bit strings, with exact quantum-circuit samplers and classical
baselines."""

__version__ = "0.1.0"

from .ising import (  # noqa: F401
    BitString,
    IsingProblem,
    LinearConstraint,
    brute_force,
    evaluate_cost,
    freeze_variable,
    gen_3regular,
    gen_portfolio,
    gen_ring,
    gen_sk,
    spectrum_histogram,
)
