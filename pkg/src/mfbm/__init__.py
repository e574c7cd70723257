"""Multiscale fractional Brownian motion: simulation, wavelet log-variance
spectra, frequency change-point estimation and goodness-of-fit testing."""

from .changepoint import (
    FrequencyGrid,
    Segmentation,
    asymptotic_refine_targets,
    build_grid,
    criterion_q,
    minimize_q,
    omega_hat,
    refine_points,
)
from .errors import (
    AnalysisError,
    ConfigError,
    DegeneratePathError,
    MfbmError,
    NumericError,
    ResourceLimitError,
    SegmentTooShortError,
    SimulationError,
)
from .inference import (
    FitResult,
    SegmentEstimate,
    chi2_cdf,
    chi2_upper_tail,
    fgls_estimate,
    fit_fixed_k,
    ols_estimate,
    select_k,
    sigma_matrix,
    test_statistic,
)
from .model import (
    ModelSpec,
    SampledPath,
    covariance,
    covariance_matrix,
    empirical_variogram,
    spectral_weight,
    variogram,
    variogram_asymptotes,
    variogram_constant,
)
from .simulate import PathSampler, SimConfig, gaussian_vector, simulate_path, uniform_stream
from .wavelet import (
    BandWavelet,
    WaveletSpectrum,
    empirical_coeff,
    k_const,
    psi_hat,
    psi_time,
    spectrum,
    theoretical_variance,
)

__version__ = "0.1.0"
