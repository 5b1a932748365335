"""Front end: the population DSL and bounded-PCTL formulas."""

from .ast import Formula, PathFormula, SystemSpec
from .errors import FlyFastError, ModelError, SpecError
from .parser import parse_formula, parse_formula_file, parse_spec_unchecked, parse_system_spec
from .printer import format_expr, format_formula, format_path, format_spec
from .validate import Diagnostic, raise_for_errors, resolve_atoms, validate

__all__ = [
    "Formula", "PathFormula", "SystemSpec",
    "FlyFastError", "ModelError", "SpecError",
    "parse_formula", "parse_formula_file", "parse_spec_unchecked", "parse_system_spec",
    "format_expr", "format_formula", "format_path", "format_spec",
    "Diagnostic", "raise_for_errors", "resolve_atoms", "validate",
]
