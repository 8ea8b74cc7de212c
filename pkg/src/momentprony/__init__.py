"""Sparse Dirac ensemble reconstruction from trigonometric and spherical-harmonic moments."""
from .certificate import SphereCertificate, build_certificate, validate_certificate
from .errors import (
    IncompleteMomentsError,
    MomentError,
    NoKernelError,
    NonIdentifiableError,
    RankDeficientError,
    SeparationError,
    SpectralGapError,
)
from .gaunt import GauntTable, cached_gaunt, gaunt_coefficients
from .harmonics import real_harmonics
from .kernels import KernelBasis, numerical_kernel
from .measures import (
    MomentTable,
    SphereEnsemble,
    TorusEnsemble,
    required_order,
    sphere_moments,
    sphere_separation,
    torus_moments,
    torus_separation,
)
from .pipeline import certify, reconstruct
from .sphere import assemble_spherical_moment_matrix
from .torus import assemble_fourier, assemble_toeplitz, recover_coefficients
from .variety import ZeroLocator, estimate_sparsity, extract_support

__version__ = "0.1.0"
