"""Input validation helpers shared by the model modules."""

from __future__ import annotations

import numpy as np

_MAX_SITES = 12

# Closer than this counts as coincident when checking general position.
POSITION_TOL = 1e-12


class GeneralPositionError(ValueError):
    """Raised when x_i = x_j or x_i - x_j = +/-eta for some pair of sites.

    ``pair`` holds the offending 1-based site indices.
    """

    def __init__(self, message: str, pair: tuple[int, int]):
        super().__init__(message)
        self.pair = pair


def set_max_sites(n: int) -> None:
    """Change the dense-matrix site cap (default 12, i.e. 4096x4096)."""
    global _MAX_SITES
    if n < 1:
        raise ValueError("max sites must be positive")
    _MAX_SITES = int(n)


def max_sites() -> int:
    return _MAX_SITES


def check_sites(N: int) -> None:
    if int(N) != N or N < 1:
        raise ValueError(f"number of sites must be a positive integer, got {N}")
    if N > _MAX_SITES:
        raise ValueError(f"N={N} exceeds the dense cap of {_MAX_SITES} sites; see set_max_sites")


def check_site(j: int, N: int) -> None:
    if int(j) != j or not 1 <= j <= N:
        raise ValueError(f"site index {j} out of range 1..{N}")


def check_sector(M: int, N: int) -> None:
    if int(M) != M or not 0 <= M <= N:
        raise ValueError(f"sector M={M} out of range 0..{N}")


def as_complex_vector(values, name: str = "x") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_distinct(x: np.ndarray, tol: float = POSITION_TOL) -> None:
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(x[i] - x[j]) <= tol:
                raise GeneralPositionError(
                    f"coincident points x_{i + 1} = x_{j + 1} = {x[i]}", (i + 1, j + 1)
                )


def check_general_position(x: np.ndarray, eta: complex, tol: float = POSITION_TOL) -> None:
    """Distinct points with no pair separated by exactly +/-eta."""
    if eta == 0:
        raise ValueError("eta must be nonzero")
    check_distinct(x, tol)
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            d = x[i] - x[j]
            if abs(d - eta) <= tol or abs(d + eta) <= tol:
                raise GeneralPositionError(
                    f"x_{i + 1} - x_{j + 1} = {d} equals +/-eta", (i + 1, j + 1)
                )


def check_finite_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains NaN or Inf entries")
    return A
