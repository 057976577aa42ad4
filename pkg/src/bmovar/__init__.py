"""Numerical estimators for oscillation, variation and lacunary differential
transforms of approximate identities, with BMO/BLO norm estimators."""
from .config import ConfigError, ExperimentConfig
from .experiments import EXPERIMENTS, RunReport, run_experiment
from .grid import Ball, EmptyBallError, Grid, SampledFunction, integrate, load_function, save_function
from .kernels import KernelSpec, bump, gaussian, get_kernel, poisson, tabulated
from .norms import BallFamily, blo_norm, bmo_blo_ratio, bmo_norm, check_bmo_structure, lp_norm
from .operators import (LacunarySequence, OperatorField, WindowIndex, cotlar_check,
                        diff_transform_maximal, diff_transform_partial, oscillation, variation)
from .plotdata import emit_plot_data
from .semigroup import SemigroupField, TimeGrid, build_field, convolve

__version__ = "0.1.0"
