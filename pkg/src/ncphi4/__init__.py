"""One-loop renormalization toolkit for the translation-invariant noncommutative phi^4 model."""
from .amplitudes import (
    AmplitudeResult,
    IntegrandId,
    nc_bubble_corrections,
    nc_tadpole_correction,
    s1_p,
    s1_zero,
    s2,
    self_energy,
)
from .model import (
    ModelParams,
    SliceFamily,
    ThetaMatrix,
    decompose_propagator,
    propagator,
    roots,
    verify_slice_bound,
)
from .rg_flow import CutoffGrid, DivergenceRegressor, beta_report, fit_divergence, gamma_four
from .ribbon import RibbonGraph, builtin_graphs, classify, power_count, trace_faces

__version__ = "0.1.0"
