"""Inhomogeneous twisted XXX chain: L-operator, R-matrix, transfer matrix,
non-local Hamiltonians and their Gaudin limit."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ._validation import (
    as_complex_vector,
    check_distinct,
    check_general_position,
    check_site,
    check_sites,
)
from .tensorspace import (
    S1,
    S2,
    SMINUS,
    SPLUS,
    embed_local,
    max_norm,
    permutation,
    site_operator_sum,
)


class ConsistencyError(RuntimeError):
    """Two independent constructions of the same object disagree."""


@dataclass(frozen=True)
class ChainParams:
    """Model definition: inhomogeneities ``x``, deformation ``eta``, twist diag(w1, w2)."""

    x: tuple
    eta: complex = 1.0
    w1: complex = 1.0
    w2: complex = 1.0
    N: int = field(init=False)

    def __post_init__(self):
        x = as_complex_vector(self.x, "x")
        object.__setattr__(self, "x", tuple(complex(v) for v in x))
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "w1", complex(self.w1))
        object.__setattr__(self, "w2", complex(self.w2))
        object.__setattr__(self, "N", len(x))
        check_sites(self.N)
        check_general_position(x, self.eta)

    @property
    def xs(self) -> np.ndarray:
        return np.array(self.x, dtype=complex)

    @property
    def twist(self) -> np.ndarray:
        return np.diag([self.w1, self.w2])

    def with_x(self, x) -> "ChainParams":
        return ChainParams(tuple(x), self.eta, self.w1, self.w2)


@dataclass(frozen=True)
class GaudinParams:
    """Gaudin model: marked points ``x`` and twist h = diag(omega1, omega2)."""

    x: tuple
    omega1: complex = 0.0
    omega2: complex = 0.0
    N: int = field(init=False)

    def __post_init__(self):
        x = as_complex_vector(self.x, "x")
        object.__setattr__(self, "x", tuple(complex(v) for v in x))
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega2", complex(self.omega2))
        object.__setattr__(self, "N", len(x))
        check_sites(self.N)
        check_distinct(x)

    @property
    def xs(self) -> np.ndarray:
        return np.array(self.x, dtype=complex)

    @property
    def twist(self) -> np.ndarray:
        return np.diag([self.omega1, self.omega2])


def lax_operator(p: ChainParams, j: int, x: complex) -> np.ndarray:
    """L_j(x - x_j) = (x - x_j) 1 (x) I + eta P_0j on C^2 (x) (C^2)^{(x)N}.

    The auxiliary space is the leading (most significant) tensor factor.
    """
    check_site(j, p.N)
    n = p.N + 1
    u = x - p.x[j - 1]
    return u * np.eye(2**n, dtype=complex) + p.eta * permutation(1, j + 1, n)


def lax_blocks(p: ChainParams, j: int, x: complex) -> list[list[np.ndarray]]:
    """2x2 auxiliary-space blocks of L_j(x - x_j), each acting on the chain."""
    check_site(j, p.N)
    return _blocks(p.N, p.eta, j, x - p.x[j - 1])


def _blocks(N: int, eta: complex, j: int, u: complex) -> list[list[np.ndarray]]:
    ident = np.eye(2**N, dtype=complex)
    return [
        [u * ident + eta * embed_local(S1, j, N), eta * embed_local(SMINUS, j, N)],
        [eta * embed_local(SPLUS, j, N), u * ident + eta * embed_local(S2, j, N)],
    ]


def r_matrix(eta: complex, x: complex) -> np.ndarray:
    """R(x) = eta 1 (x) 1 + x P on C^2 (x) C^2."""
    return eta * np.eye(4, dtype=complex) + x * permutation(1, 2, 2)


def yang_baxter_residual(eta: complex, u: complex, v: complex) -> float:
    """Max-norm residual of R12(u) R23(u+v) R12(v) = R23(v) R12(u+v) R23(u).

    R(x) = eta + x P intertwines in this braid form; it is P times the
    R-matrix of the ``R12 R13 R23`` form.
    """
    ident = np.eye(2, dtype=complex)

    def r12(a):
        return np.kron(r_matrix(eta, a), ident)

    def r23(a):
        return np.kron(ident, r_matrix(eta, a))

    lhs = r12(u) @ r23(u + v) @ r12(v)
    rhs = r23(v) @ r12(u + v) @ r23(u)
    return max_norm(lhs - rhs)


def _local_lax_pair(eta: complex, a: complex, b: complex):
    """L_{0j}(a) L_{0'j}(b) pieces on V_0 (x) V_0' (x) V_j (8x8)."""
    ident = np.eye(8, dtype=complex)
    L0 = a * ident + eta * permutation(1, 3, 3)
    L0p = b * ident + eta * permutation(2, 3, 3)
    return L0, L0p


def rll_residual(R: np.ndarray, La: np.ndarray, Lb: np.ndarray, La_swapped: np.ndarray,
                 Lb_swapped: np.ndarray) -> float:
    """Max-norm of ``R La Lb - La_swapped Lb_swapped R`` with R embedded on V_0 (x) V_0'."""
    R3 = np.kron(R, np.eye(2, dtype=complex))
    return max_norm(R3 @ (La @ Lb) - (La_swapped @ Lb_swapped) @ R3)


def check_rll(p: ChainParams, j: int, x: complex, xp: complex) -> float:
    """Residual of R(x-x') L_j(x-x_j) (x) L_j(x'-x_j) = L_j(x'-x_j) (x) L_j(x-x_j) R(x-x').

    Sites other than j enter as identity factors, so the check runs on the
    8-dimensional space V_0 (x) V_0' (x) V_j.
    """
    check_site(j, p.N)
    xj = p.x[j - 1]
    La, Lb = _local_lax_pair(p.eta, x - xj, xp - xj)
    Sa, Sb = _local_lax_pair(p.eta, xp - xj, x - xj)
    return rll_residual(r_matrix(p.eta, x - xp), La, Lb, Sa, Sb)


def twisted_transfer(xs, eta: complex, w1: complex, w2: complex, x: complex) -> np.ndarray:
    """tr_0[diag(w1, w2) L_1(x - xs[0]) ... L_N(x - xs[N-1])] without parameter checks.

    Also covers the homogeneous chain (all xs equal), which ChainParams rejects.
    The ordered product is formed block-wise in the auxiliary space; only the
    two diagonal blocks are needed for the trace.
    """
    N = len(xs)
    prod = _blocks(N, eta, 1, x - xs[0])
    for j in range(2, N + 1):
        B = _blocks(N, eta, j, x - xs[j - 1])
        prod = [
            [prod[0][0] @ B[0][0] + prod[0][1] @ B[1][0], prod[0][0] @ B[0][1] + prod[0][1] @ B[1][1]],
            [prod[1][0] @ B[0][0] + prod[1][1] @ B[1][0], prod[1][0] @ B[0][1] + prod[1][1] @ B[1][1]],
        ]
    return w1 * prod[0][0] + w2 * prod[1][1]


def transfer_matrix(p: ChainParams, x: complex) -> np.ndarray:
    """T(x) = tr_0[g L_1(x-x_1) ... L_N(x-x_N)]."""
    return twisted_transfer(p.x, p.eta, p.w1, p.w2, x)


def interpolation_nodes(p: ChainParams) -> np.ndarray:
    """N+1 Chebyshev points spread over the inhomogeneity range."""
    xs = p.xs
    center = xs.mean()
    radius = max(1.0, float(np.max(np.abs(xs - center))), abs(p.eta))
    k = np.arange(p.N + 1)
    return center + radius * np.cos(np.pi * (k + 0.5) / (p.N + 1))


def transfer_coefficients(p: ChainParams, nodes=None) -> list[np.ndarray]:
    """Operators [J_0, ..., J_{N-1}, J_N] with T(x) = sum_k J_k x^k.

    Recovered by interpolating T at N+1 nodes; J_N should be (w1 + w2) I.
    """
    nodes = interpolation_nodes(p) if nodes is None else np.asarray(nodes, dtype=complex)
    if len(nodes) != p.N + 1:
        raise ValueError(f"need {p.N + 1} interpolation nodes, got {len(nodes)}")
    if len(set(np.round(nodes, 14))) != len(nodes):
        raise ValueError("interpolation nodes must be distinct")
    dim = 2**p.N
    values = np.stack([transfer_matrix(p, t).ravel() for t in nodes])
    V = np.vander(nodes, p.N + 1, increasing=True)
    coeffs = np.linalg.solve(V, values)
    return [c.reshape(dim, dim) for c in coeffs]


def subleading_coefficient(p: ChainParams) -> np.ndarray:
    """Closed form of J_{N-1}: eta sum_i g^(i) - (w1 + w2)(sum_j x_j) I."""
    dim = 2**p.N
    return p.eta * site_operator_sum(p.twist, p.N) - (p.w1 + p.w2) * sum(p.x) * np.eye(dim)


def _ordered_factor(p: ChainParams, i: int, j: int) -> np.ndarray:
    dim = 2**p.N
    return np.eye(dim, dtype=complex) + p.eta * permutation(i, j, p.N) / (p.x[i - 1] - p.x[j - 1])


def nonlocal_hamiltonians_product(p: ChainParams) -> list[np.ndarray]:
    """H_i = [prod_{j>i} (I + eta P_ij/x_ij)] g^(i) [prod_{j<i} (I + eta P_ij/x_ij)]."""
    N = p.N
    ident = np.eye(2**N, dtype=complex)
    out = []
    for i in range(1, N + 1):
        left = reduce(np.matmul, (_ordered_factor(p, i, j) for j in range(i + 1, N + 1)), ident)
        right = reduce(np.matmul, (_ordered_factor(p, i, j) for j in range(1, i)), ident)
        out.append(left @ embed_local(p.twist, i, N) @ right)
    return out


def nonlocal_hamiltonians_residue(p: ChainParams) -> list[np.ndarray]:
    """H_j from the residue of T(x)/prod_k(x - x_k) at x_j, divided by eta."""
    xs = p.xs
    out = []
    for j in range(p.N):
        denom = np.prod([xs[j] - xs[k] for k in range(p.N) if k != j])
        out.append(transfer_matrix(p, xs[j]) / (p.eta * denom))
    return out


def nonlocal_hamiltonians(p: ChainParams, check: bool = True, tol: float = 1e-9) -> list[np.ndarray]:
    """The N commuting non-local Hamiltonians H_1..H_N.

    Built from the ordered-product formula. With ``check`` the residue
    construction is evaluated too and any disagreement above ``tol`` (scaled
    by the operator size) raises ConsistencyError.
    """
    hams = nonlocal_hamiltonians_product(p)
    if check:
        for i, (a, b) in enumerate(zip(hams, nonlocal_hamiltonians_residue(p)), start=1):
            err = max_norm(a - b)
            if err > tol * max(1.0, max_norm(a)):
                raise ConsistencyError(f"H_{i}: product and residue forms differ by {err:.3e}")
    return hams


def gaudin_hamiltonians(p: GaudinParams) -> list[np.ndarray]:
    """H_i^G = h^(i) + sum_{j != i} P_ij / (x_i - x_j)."""
    N = p.N
    out = []
    for i in range(1, N + 1):
        H = embed_local(p.twist, i, N)
        for j in range(1, N + 1):
            if j != i:
                H = H + permutation(i, j, N) / (p.x[i - 1] - p.x[j - 1])
        out.append(H)
    return out


def cyclic_shift(N: int) -> np.ndarray:
    """P_{N-1,N} ... P_23 P_12, the cyclic shift that J_0 / eta^N equals."""
    ident = np.eye(2**N, dtype=complex)
    return reduce(np.matmul, (permutation(j, j + 1, N) for j in range(N - 1, 0, -1)), ident)


def homogeneous_transfer_coefficients(N: int, eta: complex = 1.0) -> list[np.ndarray]:
    """J_0..J_N of the homogeneous untwisted transfer matrix, by exact interpolation."""
    check_sites(N)
    nodes = np.cos(np.pi * (np.arange(N + 1) + 0.5) / (N + 1)) * max(1.0, abs(eta))
    dim = 2**N
    values = np.stack([twisted_transfer([0.0] * N, eta, 1.0, 1.0, t).ravel() for t in nodes])
    coeffs = np.linalg.solve(np.vander(nodes, N + 1, increasing=True), values)
    return [c.reshape(dim, dim) for c in coeffs]


def heisenberg_from_transfer(N: int, eta: complex = 1.0) -> np.ndarray:
    """eta J_0^{-1} J_1 - N I (log-derivative of T at 0), homogeneous untwisted chain."""
    J = homogeneous_transfer_coefficients(N, eta)
    return eta * np.linalg.solve(J[0], J[1]) - N * np.eye(2**N)
