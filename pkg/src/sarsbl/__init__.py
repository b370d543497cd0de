"""Sub-aperture SAR image formation with sparse Bayesian learning."""
from ._kernels import BACKEND
from .baseline import AdmmConfig, l1_admm, nufft_baseline, nufft_l1, soft_threshold
from .composite import (CompositeResult, combine, composite_alpha, composite_max,
                        composite_mean, composite_std)
from .config import ConfigError, RunConfig
from .core import (AperturePlan, ComplexImage, FreqCoords, PhaseHistory, SceneGrid, Window,
                   compute_spatial_frequencies, freq_coords, plan_subapertures)
from .metrics import (LogHistogram, RegionSpec, background_mode, log_histogram,
                      region_variance, timing_report, to_db)
from .nufft import MatrixOperator, NUFFTOperator, adjoint, forward, ml_estimate
from .regularizers import PhaseMatrix, SparsifyingOperator, identity, make_operator, phase_from, tv2d
from .simulator import (AcquisitionSpec, Scatterer, SceneSpec, cartesian_acquisition,
                        make_scene, polar_acquisition, synthesize)
from .solver import SolverConfig, SubAperturePosterior, WindowError, run_all, run_window

__version__ = "0.1.0"
