"""critlab: numerical laboratory for energy-critical radial ground states."""

from .core import (AdmissibilityReport, CritlabError, Dimension,
                   NonlinearitySpec, RadialField, RadialGrid, ScaleConstants,
                   check_admissibility, derive_scale_constants, lambda_w,
                   pairing_w_power_lambda_w, scale_alpha, scale_beta,
                   scale_delta, smallball_integral, w_potential, w_profile)
from .functionals import IdentityReport, evaluate_identities, identity_report, norms
from .shooting import (Diagnostics, GroundState, NoBracketError, ResidualError,
                       ShotClassification, TailModel, decay_check,
                       find_ground_state, integrate_shot)

__version__ = "0.1.0"
