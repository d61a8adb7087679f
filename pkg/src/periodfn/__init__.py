"""Periods, period functions and circle actions of flows."""

from .detect import (DetectorConfig, PeriodResult, classify_batch, classify_point,
                     period_lower_bound_probe)
from .errors import *  # noqa: F401,F403
from .expr import PolynomialField, diff, parse_expr, to_text
from .flow import Domain, FlowSpec, IntegratorConfig, evaluate_field, evaluate_flow
from .gallery import NAMES as GALLERY_NAMES, gallery_get
from .geometry import (CyclicActionSample, dress_bound_check, hoffman_mann_check,
                       orbit_geometry, orbit_geometry_batch)
from .grid import Grid, make_grid
from .linearization import (classify_fixed_point, gamma_estimate, jacobian_at,
                            period_blowup_probe, real_jordan_classify)
from .period_function import (FieldConfig, PeriodFunctionField, build_period_field,
                              check_regularity, circle_action, detect_generator,
                              extend_period_function, probe_conditions,
                              verify_p_function, zp_divisibility_test)

__version__ = "0.1.0"
