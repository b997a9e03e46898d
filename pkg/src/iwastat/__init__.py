"""Class groups, Iwasawa lambda-invariants and Cohen-Lenstra statistics for imaginary quadratic fields."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .arith import FundamentalDiscriminant, Splitting, enumerate_fundamental, is_fundamental, kronecker
from .classgroup import AbelianGroupStructure, QuadraticForm, class_number, group_structure
from .cldensity import DensityValue, density_rank_exact, density_rank_ge, lambda_lower_bound, pochhammer
from .iwasawa import LambdaResult, gold_criterion, lambda_invariant

__all__ = [
    "BACKEND",
    "AbelianGroupStructure",
    "DensityValue",
    "FundamentalDiscriminant",
    "LambdaResult",
    "QuadraticForm",
    "Splitting",
    "class_number",
    "density_rank_exact",
    "density_rank_ge",
    "enumerate_fundamental",
    "gold_criterion",
    "group_structure",
    "is_fundamental",
    "kronecker",
    "lambda_invariant",
    "lambda_lower_bound",
    "pochhammer",
]
