"""Non-parametric quickest detection of an increase in the mean of [0, 1]-valued data."""

from .calibration import (
    Calibration,
    bessel_k1,
    calibrate,
    cusum_threshold,
    fa_bound,
    mct_threshold,
    r0,
    refined_threshold,
)
from .detectors import (
    DetectorState,
    ExactLlr,
    MctLlr,
    TiltedLlr,
    increment,
    max_form_oracle,
    run_until_alarm,
    trajectory,
    update,
)
from .distributions import (
    BetaDistribution,
    BoundedDistribution,
    DiscretizedDistribution,
    EmpiricalDistribution,
    RngStream,
    beta_moments,
    cgf,
    cgf_prime,
    empirical_moments,
    sample,
)
from .estimators import CusumDetector, MeanChangeDetector, TiltedCusumDetector
from .lfd import (
    MeanChangeParams,
    TiltedLfd,
    kl_lfd,
    kl_small_delta,
    lambda_star_small_delta,
    solve_lambda_star,
    tilted_llr,
)
from .monitoring import MonitorConfig, MonitorReport, fit_prechange, ingest_csv, monitor, moving_average
from .simulation import (
    OcTable,
    estimate_crossing_probability,
    estimate_mtfa,
    estimate_wadd,
    oc_sweep,
    simulate_stopping_times,
)

__version__ = "0.1.0"
