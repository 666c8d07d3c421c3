"""Brute-force dense computations used to cross-check the sparse engine on tiny inputs."""

import itertools
import logging

from sympy import Matrix, Rational, zeros

from cyclic_engine.algebra_model import FDAlgebra
from cyclic_engine.options import check_tensor_budget

logger = logging.getLogger(__name__)

# dense matrices above this many entries are not worth building
DENSE_CAP = 250_000


def _mult_tilde(A: FDAlgebra, x: int, y: int) -> dict[int, Rational]:
    """Product in the unitization, with the adjoined unit at index A.dim."""
    if x == A.dim:
        return {y: Rational(1)}
    if y == A.dim:
        return {x: Rational(1)}
    return {k: Rational(v.numerator, v.denominator) for k, v in A.product(x, y).items()}


def _legs(A: FDAlgebra, k: int) -> list[tuple[int, ...]]:
    if k == 0:
        return [(a,) for a in range(A.dim)]
    return [(x0,) + rest for x0 in range(A.dim + 1) for rest in itertools.product(range(A.dim), repeat=k)]


def dense_hochschild_boundary(A: FDAlgebra, k: int) -> Matrix:
    """b : CC_k -> CC_{k-1} written out from the face maps d_i, b = sum (-1)^i d_i."""
    source, target = _legs(A, k), _legs(A, k - 1)
    check_tensor_budget(len(source) * len(target), DENSE_CAP, what=f"dense b_{k}")
    position = {t: i for i, t in enumerate(target)}
    M = zeros(len(target), len(source))
    for col, t in enumerate(source):
        for i in range(k + 1):
            if i < k:
                left, right = t[i], t[i + 1]
                prefix, suffix = t[:i], t[i + 2 :]
                for p, v in _mult_tilde(A, left, right).items():
                    M[position[prefix + (p,) + suffix], col] += (-1) ** i * v
            else:
                for p, v in _mult_tilde(A, t[k], t[0]).items():
                    M[position[(p,) + t[1:k]], col] += (-1) ** k * v
    return M


def dense_hochschild_dims(A: FDAlgebra, max_deg: int) -> dict[int, int]:
    """dim HH_k for k < max_deg via sympy ranks of dense boundary matrices."""
    ranks = {k: dense_hochschild_boundary(A, k).rank() for k in range(1, max_deg + 1)}
    dims = {}
    for k in range(max_deg):
        size = len(_legs(A, k))
        dims[k] = size - ranks.get(k, 0) - ranks[k + 1]
    logger.debug("dense HH(%s) = %s", A.name, dims)
    return dims
