"""Operators on the spin-1/2 chain state space (C^2)^{(x)N}.

Basis convention: computational basis ordered by binary index. Bit value 0
at a site means spin up (|+>), 1 means spin down (|->). Site 1 is the most
significant bit, so ``|+->`` for N=2 is index 1.

Operators are plain dense ``numpy`` arrays of shape ``(2**N, 2**N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import comb

import numpy as np

from ._validation import check_site, check_sites

ID2 = np.eye(2, dtype=complex)
SX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
SY = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
SPLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SMINUS = np.array([[0, 0], [1, 0]], dtype=complex)
S1 = np.array([[1, 0], [0, 0]], dtype=complex)
S2 = np.array([[0, 0], [0, 1]], dtype=complex)


def basis_state(spins: str) -> np.ndarray:
    """Basis vector from a string of ``+``/``-`` characters, e.g. ``"+-+"``."""
    if not spins or set(spins) - {"+", "-"}:
        raise ValueError(f"spin string must be made of '+' and '-', got {spins!r}")
    index = int("".join("1" if s == "-" else "0" for s in spins), 2)
    vec = np.zeros(2 ** len(spins), dtype=complex)
    vec[index] = 1.0
    return vec


def embed_local(local, j: int, N: int) -> np.ndarray:
    """Return ``1^{(j-1)} (x) local (x) 1^{(N-j)}`` acting on N sites."""
    check_sites(N)
    check_site(j, N)
    local = np.asarray(local, dtype=complex)
    if local.shape != (2, 2):
        raise ValueError(f"local operator must be 2x2, got shape {local.shape}")
    left = np.eye(2 ** (j - 1), dtype=complex)
    right = np.eye(2 ** (N - j), dtype=complex)
    return np.kron(np.kron(left, local), right)


def _site_bits(N: int) -> np.ndarray:
    """Array ``bits[b, j-1]`` with the spin-down bit of site j in basis state b."""
    idx = np.arange(2**N)
    shifts = N - 1 - np.arange(N)
    return (idx[:, None] >> shifts[None, :]) & 1


def permutation(i: int, j: int, N: int) -> np.ndarray:
    """Permutation operator P_ij exchanging the factors at sites i and j."""
    check_sites(N)
    check_site(i, N)
    check_site(j, N)
    if i == j:
        raise ValueError(f"permutation needs two distinct sites, got i = j = {i}")
    bits = _site_bits(N)
    swapped = bits.copy()
    swapped[:, [i - 1, j - 1]] = bits[:, [j - 1, i - 1]]
    weights = 1 << (N - 1 - np.arange(N))
    target = swapped @ weights
    P = np.zeros((2**N, 2**N), dtype=complex)
    P[target, np.arange(2**N)] = 1.0
    return P


def magnon_number(N: int) -> np.ndarray:
    """Diagonal operator counting down spins."""
    check_sites(N)
    return np.diag(_site_bits(N).sum(axis=1).astype(complex))


@dataclass(frozen=True)
class SectorBasis:
    """Basis states of the invariant subspace with M down spins."""

    N: int
    M: int
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def restrict(self, op: np.ndarray) -> np.ndarray:
        """Block of ``op`` acting inside this sector."""
        return op[np.ix_(self.indices, self.indices)]

    def lift(self, vec: np.ndarray) -> np.ndarray:
        """Embed a sector vector into the full 2^N space."""
        full = np.zeros(2**self.N, dtype=complex)
        full[self.indices] = vec
        return full


def sector_basis(N: int, M: int) -> SectorBasis:
    check_sites(N)
    if not 0 <= M <= N:
        raise ValueError(f"sector M={M} out of range 0..{N}")
    counts = _site_bits(N).sum(axis=1)
    indices = np.flatnonzero(counts == M)
    assert len(indices) == comb(N, M)
    return SectorBasis(N, M, indices)


def heisenberg_hamiltonian(N: int) -> np.ndarray:
    """Periodic XXX Hamiltonian ``sum_j P_{j,j+1} - N I`` (site N+1 is site 1).

    For N=2 both bonds are the same pair and P_12 enters twice.
    """
    check_sites(N)
    if N < 2:
        raise ValueError(f"Heisenberg chain needs N >= 2, got {N}")
    H = -N * np.eye(2**N, dtype=complex)
    for j in range(1, N + 1):
        H += permutation(j, j % N + 1, N)
    return H


def site_operator_sum(local, N: int) -> np.ndarray:
    """``sum_i local^{(i)}``, e.g. the total twist ``sum_i g^{(i)}``."""
    return reduce(np.add, (embed_local(local, i, N) for i in range(1, N + 1)))


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def max_norm(A) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0
