"""Exponential change of measure for martingale partial sums.

Importance-sampling estimators of tail probabilities under the conjugate
measure, plus numerical checks of Cramer-type moderate deviation bounds
on concrete martingale models.
"""

__version__ = "0.1.0"

from .core import (
    ConditionConstants,
    ConditionReport,
    InvalidInputError,
    MartingaleTiltError,
    Path,
    PrecisionError,
    RangeError,
    ResourceError,
    UnsupportedModeError,
    UnsupportedModelError,
    check_A1,
    check_A1prime,
    check_A2,
    check_bernstein,
    moment_bound_check,
    partial_sums,
    quadratic_characteristic,
)
from .estimators import (
    Estimate,
    EnvelopeParams,
    envelope,
    exact_tail_enumeration,
    is_tail,
    lower_tail,
    mdp_point,
    naive_mc_tail,
    normal_tail,
    ratio,
)
from .models import (
    BernsteinMixture,
    HeteroscedasticRademacher,
    RademacherIID,
    RngStream,
    TruncatedGaussian,
    build_model,
)
from .tilting import (
    B_n,
    Psi_n,
    TiltConfig,
    TiltedPath,
    decompose,
    drift,
    simulate_tilted,
    solve_lambda,
)
from .config import ExperimentConfig, load_packaged
from .verify import (
    ExperimentGrid,
    lemma31_check,
    lemma32_check,
    lemma33_check,
    lemma34_ks,
    mdp_scan,
    theorem_ratio_scan,
)
