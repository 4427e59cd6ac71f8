"""Exact-arithmetic lab for Strassen-like matrix multiplication with
algebra decompositions: engines, operation counters, closed-form cost
predictors and an LRU IO simulator."""

from .linalg import BlockVector, LinearMap, InterceptionMap, matrix, naive_multiply, mat_equal
from .bilinear import (BilinearAlgorithm, BasisTriple, strassen, naive_algorithm,
                       validate_algorithm, recursive_multiply, ab_multiply)
from .decomposition import (AlgebraDecomposition, validate_decomposition, derive_cost_parameters,
                            combine_decompositions, load_decomposition, save_decomposition)
from .counters import Machine, CostReport
from .engines import ac, bc, dc, cc, bc_star, cc_star, run_engine, ENGINES

__version__ = "0.1.0"
