"""Collective spin-boson pulse dynamics.

Thin Python layer over the C++ core. Arrays come back as numpy arrays;
configuration errors raise ``vibronic.ConfigError`` (a ``ValueError``).
"""

from ._core import (
    ConfigError,
    ConvergenceError,
    IntegratorError,
    __version__,
    build_basis,
    critical_coupling,
    estimate_vmax,
    estimate_vmin,
    hamiltonian,
    lambda_at,
    log_negativity,
    lzs_excited_prob,
    lzs_peak_velocity,
    lzs_transition_prob,
    negativity,
    op_matrix,
    partial_trace,
    run_experiment,
    simulate_pulse,
    simulate_sweep,
    smeared_moments,
    von_neumann_entropy,
    wigner,
)

LHCII_EPSILON_RATIO = 667.7 / 742.0

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "IntegratorError",
    "LHCII_EPSILON_RATIO",
    "build_basis",
    "critical_coupling",
    "estimate_vmax",
    "estimate_vmin",
    "hamiltonian",
    "lambda_at",
    "log_negativity",
    "lzs_excited_prob",
    "lzs_peak_velocity",
    "lzs_transition_prob",
    "negativity",
    "op_matrix",
    "partial_trace",
    "run_experiment",
    "simulate_pulse",
    "simulate_sweep",
    "smeared_moments",
    "von_neumann_entropy",
    "wigner",
]
