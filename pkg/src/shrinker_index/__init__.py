"""Profile curves, restricted spectra and F-index certificates for rotationally symmetric self-shrinkers."""
from ._core import HAVE_COMPILED, backend_name, get_backend
from .errors import BoundaryConditionError, EmptyDomainError, NoOrbitFound, ProfileError, SolverError
from .functional import (SpacetimeCenter, entropy, entropy_along_variation, f_value,
                         quadratic_decrease_fit, stationarity_gradient)
from .geometry import ProfileCurve, WeightSpec, shrinker_residual, weighted_integral
from .operator import ModeOperator, assemble_mode_operator, known_eigenfunction, residual_check
from .profiles import (ShootingProblem, ShootingReport, analytic_profile, angenent_torus,
                       integrate_shrinker_ode, resample, round_profile, shoot_closed_orbit, truncate)
from .spectra import (SpectralSweep, Spectrum, almost_bessel_check, dense_eigenvalues, fourier_project,
                      lowest_eigenpairs, sweep_bottom_spectrum)
from .variation import (IndexCertificate, ModeFunction, VariationAssessment, certify_index, is_unstable,
                        optimize_spacetime, orthogonality_report, second_variation, sign_change)

__version__ = "0.1.0"
