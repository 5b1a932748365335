"""Bounded PCTL model checking of population models, exactly or in the mean-field limit."""

from .checker import Checker, CheckResult, SafetyIncident, check, check_path, safety_monitor
from .exact import (
    ExactModel, LumpedGlobalState, action_prob, eval_expr, lab_eval_exact, next_exact,
    object_matrix, occupancy_measure, simulate,
)
from .lang import parse_formula, parse_formula_file, parse_system_spec, validate
from .meanfield import HState, MeanFieldModel, lab_eval_hd, mf_step, mf_trajectory, next_hd

__version__ = "0.1.0"
