"""Absolutely continuous, opposite-symmetric copulas with prescribed support."""
from .base import Copula, kendall_tau_direct, kendall_tau_paper, l_from_omega, opposite_diagonal
from .construction import BuildOptions
from .errors import *  # noqa: F401,F403
from .generators import (GFunction, LFunction, gap_l, linear_l, power_g, quadratic_l,
                         sine_g)
from .models import build_from_config, load_model, save_model
from .prescribed import (PrescribedCopula, build_main, build_with_G, build_with_L,
                         example_5_3, example_5_4)
from .probit import (ExposureProfile, ProbitLevel, check_compatibility,
                     check_lemma_inequalities, injured_fraction, probit_value,
                     sample_threshold_chain, toxic_load)
from .sampling import SampleBatch, invert_conditional, sample_pairs, to_normal_pairs
from .separable import (SeparableCopula, independence, power_copula, separable_from_G,
                        separable_from_L, sine_copula)
from .support import (SupportFunction, custom_h, gaussian_shift_h, piecewise_linear_h,
                      validate_support)
from .validation import (ValidationReport, check_copula_axioms, check_density_mass,
                         check_opposite_symmetry, kendall_tau_report, validate_copula)

__version__ = "0.1.0"
