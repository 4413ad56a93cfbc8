"""Weighted Besov calculus, outgoing Helmholtz resolvents and a rescaled Lippmann-Schwinger solver."""

__version__ = "0.1.0"

from .grid import Grid, SpectralField, WeightSpec, make_field, make_grid, transform, weighted_lp_norm
from .littlewood_paley import (BesovSpec, PartitionPair, besov_norm, build_partition_pair, dyadic_block,
                               lifting_apply, partial_sum)
from .paraproduct import bony_decompose, phi_apply, xi_apply
from .resolvents import (FaddeevParams, ShellCutoff, green_convolve, limiting_apply, regularized_apply,
                         shell_split_pairing, symbol_m)
from .solver import HelmholtzProblem, SolverConfig, build_problem, picard_solve, solve

__all__ = [
    "Grid", "SpectralField", "WeightSpec", "make_field", "make_grid", "transform", "weighted_lp_norm",
    "BesovSpec", "PartitionPair", "besov_norm", "build_partition_pair", "dyadic_block", "lifting_apply",
    "partial_sum", "bony_decompose", "phi_apply", "xi_apply", "FaddeevParams", "ShellCutoff",
    "green_convolve", "limiting_apply", "regularized_apply", "shell_split_pairing", "symbol_m",
    "HelmholtzProblem", "SolverConfig", "build_problem", "picard_solve", "solve",
]
