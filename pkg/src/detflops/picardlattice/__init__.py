"""Divisor lattices, intersection numbers and flop-induced lattice maps."""

from .lattice import (
    CalibrationUnavailable, DimensionMismatch, DivisorClass, IntersectionForm, LatticeError,
    PushforwardMatrix, basis, check_pushforward, from_pullback_column, intersection_number,
    load_fixtures, nef_cone, save_fixtures, shipped_fixture_path, structural_pushforward,
)
from .oracle import OracleInconclusive, OracleResult, degree_count_pullback, geometric_count
from .calibrate import pushforward_matrix, calibrate_all

__all__ = [
    "CalibrationUnavailable", "DimensionMismatch", "DivisorClass", "IntersectionForm", "LatticeError",
    "PushforwardMatrix", "basis", "check_pushforward", "from_pullback_column", "intersection_number",
    "load_fixtures", "nef_cone", "save_fixtures", "shipped_fixture_path", "structural_pushforward",
    "OracleInconclusive", "OracleResult", "degree_count_pullback", "geometric_count",
    "pushforward_matrix", "calibrate_all",
]
