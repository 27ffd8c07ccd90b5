"""Exact arithmetic: fields, dense matrices and multihomogeneous polynomials."""

from .fields import (
    QQ, GF, FieldError, FieldSpec, FieldElem, Rationals, PrimeField, ExtensionField,
    is_prime, is_irreducible, conway_free_modulus, parse_field, field_from_json,
)
from .matrix import (
    DenseMatrix, NonSquare, WrongRank, matrix_rank, matrix_det, nullspace,
    corank1_kernel, normalize_projective, adjugate, batch_det, batch_minors_vanish,
)
from .poly import MultiPoly, NotHomogeneous, SizeBudgetExceeded, poly_det, DEFAULT_TERM_CAP

__all__ = [
    "QQ", "GF", "FieldError", "FieldSpec", "FieldElem", "Rationals", "PrimeField",
    "ExtensionField", "is_prime", "is_irreducible", "conway_free_modulus", "parse_field",
    "field_from_json", "DenseMatrix", "NonSquare", "WrongRank", "matrix_rank", "matrix_det",
    "nullspace", "corank1_kernel", "normalize_projective", "adjugate", "batch_det",
    "batch_minors_vanish", "MultiPoly", "NotHomogeneous", "SizeBudgetExceeded", "poly_det",
    "DEFAULT_TERM_CAP",
]
