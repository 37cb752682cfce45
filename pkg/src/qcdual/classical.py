"""Classical Ruijsenaars-Schneider and Calogero-Moser machinery.

Lax matrices are written in terms of coordinates ``x`` and velocities ``v``
(= dx/dt). Characteristic polynomials are returned as coefficient arrays
``c`` with ``det(lam I - A) = sum_n c[n] lam**(N-n)`` and ``c[0] == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Literal

import numpy as np

from ._validation import as_complex_vector, check_distinct, check_finite_square, check_general_position

Kind = Literal["RS", "CM"]


def _pair_differences(x: np.ndarray) -> np.ndarray:
    return x[:, None] - x[None, :]


def _rs_inputs(x, v, eta):
    x = as_complex_vector(x, "x")
    v = as_complex_vector(v, "v")
    if len(x) != len(v):
        raise ValueError("x and v must have the same length")
    check_general_position(x, eta)
    return x, v, complex(eta)


def cauchy_matrix(x, eta) -> np.ndarray:
    """C_ij = eta / (x_i - x_j - eta); the diagonal is -1."""
    x = as_complex_vector(x)
    check_general_position(x, eta)
    return eta / (_pair_differences(x) - eta)


def pair_weights(x, eta) -> np.ndarray:
    """(1 - eta^2 / (x_i - x_j)^2)^{-1} for i != j (diagonal set to 1)."""
    d = _pair_differences(np.asarray(x, dtype=complex))
    off = ~np.eye(len(d), dtype=bool)
    d2 = np.where(off, d, 1.0) ** 2
    return np.where(off, d2 / np.where(off, d2 - eta**2, 1.0), 1.0)


def cauchy_det(x, eta) -> complex:
    """(-1)^n prod_{i<j} (1 - eta^2/(x_i - x_j)^2)^{-1}."""
    x = as_complex_vector(x)
    check_general_position(x, eta)
    w = pair_weights(x, eta)
    n = len(x)
    return (-1) ** n * np.prod(w[np.triu_indices(n, 1)])


def cauchy_det_direct(x, eta) -> complex:
    return complex(np.linalg.det(cauchy_matrix(x, eta)))


def rs_lax(x, v, eta) -> np.ndarray:
    """Y_ij = eta v_i / (x_i - x_j - eta); Y_ii = -v_i."""
    x, v, eta = _rs_inputs(x, v, eta)
    return v[:, None] * (eta / (_pair_differences(x) - eta))


def cm_lax(x, v) -> np.ndarray:
    """Y_ii = -v_i, Y_ij = -1/(x_i - x_j)."""
    x = as_complex_vector(x, "x")
    v = as_complex_vector(v, "v")
    check_distinct(x)
    d = _pair_differences(x)
    np.fill_diagonal(d, 1.0)
    Y = -1.0 / d
    np.fill_diagonal(Y, -v)
    return Y


def rs_commutation_residual(x, v, eta) -> float:
    """max |[X, Y] - eta Y - eta Xdot E|, zero for a valid RS Lax matrix."""
    x, v, eta = _rs_inputs(x, v, eta)
    Y = rs_lax(x, v, eta)
    X = np.diag(x)
    E = np.ones_like(Y)
    return float(np.abs(X @ Y - Y @ X - eta * Y - eta * np.diag(v) @ E).max())


def rs_b_matrix(x, v, eta) -> np.ndarray:
    """B partner of the RS Lax matrix: dY/dt = [B, Y] on solutions."""
    x, v, eta = _rs_inputs(x, v, eta)
    d = _pair_differences(x)
    off = ~np.eye(len(x), dtype=bool)
    dd = np.where(off, d, 1.0)
    B = np.where(off, v[:, None] / dd, 0.0)
    diag = np.where(off, v[None, :] / dd, 0.0).sum(axis=1) - (v[None, :] / (d + eta)).sum(axis=1)
    np.fill_diagonal(B, diag)
    return B


def cm_b_matrix(x, v=None) -> np.ndarray:
    """B_ij = 1/(x_i - x_j)^2 off the diagonal, B_ii = -sum_k 1/(x_i - x_k)^2."""
    x = as_complex_vector(x)
    d = _pair_differences(x)
    off = ~np.eye(len(x), dtype=bool)
    B = np.where(off, 1.0 / np.where(off, d, 1.0) ** 2, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))
    return B


def char_poly(A) -> np.ndarray:
    """Coefficients of det(lam I - A) by the Faddeev-LeVerrier recursion."""
    A = check_finite_square(A)
    n = A.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    Mk = np.zeros_like(A)
    ident = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        Mk = A @ Mk + c[k - 1] * ident
        c[k] = -np.trace(A @ Mk) / k
    return c


def rs_char_poly_closed(x, H, eta) -> np.ndarray:
    """det(lam I - Y) for Y = rs_lax(x, -H, eta) as a sum over principal minors.

    J_n = (-1)^n sum_{|S|=n} prod_{i in S} H_i prod_{a<b in S} (1 - eta^2/x_ab^2)^{-1}.
    """
    x, H, eta = _rs_inputs(x, H, eta)
    w = pair_weights(x, eta)
    N = len(x)
    J = np.zeros(N + 1, dtype=complex)
    J[0] = 1.0
    for n in range(1, N + 1):
        total = 0j
        for S in combinations(range(N), n):
            term = np.prod(H[list(S)])
            for a, b in combinations(S, 2):
                term *= w[a, b]
            total += term
        J[n] = (-1) ** n * total
    return J


def rs_char_poly_eps(x, H, eta) -> np.ndarray:
    """The same polynomial summed over occupation vectors eps in {0,1}^N."""
    x, H, eta = _rs_inputs(x, H, eta)
    w = pair_weights(x, eta)
    N = len(x)
    J = np.zeros(N + 1, dtype=complex)
    for eps in product((0, 1), repeat=N):
        term = 1.0 + 0j
        for i in range(N):
            if eps[i]:
                term *= -H[i]
        for j in range(N):
            for k in range(j + 1, N):
                if eps[j] and eps[k]:
                    term *= w[j, k]
        J[sum(eps)] += term
    return J


def _matchings(items: tuple):
    """All sets of disjoint pairs drawn from ``items`` (the empty set included)."""
    if len(items) < 2:
        yield ()
        return
    first, rest = items[0], items[1:]
    yield from _matchings(rest)
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for m in _matchings(remaining):
            yield ((first, partner),) + m


def cm_char_poly_closed(x, HG) -> np.ndarray:
    """exp(sum_{i<j} d_i d_j / x_ij^2) prod_k (lam - y_k) at y = HG.

    Each mixed derivative d_i d_j can act at most once on the product, so the
    exponential collapses to a sum over partial matchings of the sites, each
    pair contributing 1/x_ij^2 and removing both linear factors.
    """
    x = as_complex_vector(x, "x")
    HG = as_complex_vector(HG, "HG")
    check_distinct(x)
    N = len(x)
    poly = np.zeros(N + 1, dtype=complex)
    for m in _matchings(tuple(range(N))):
        weight = 1.0 + 0j
        used = set()
        for i, j in m:
            weight /= (x[i] - x[j]) ** 2
            used.update((i, j))
        factor = np.poly(HG[[k for k in range(N) if k not in used]]) if len(used) < N else np.ones(1)
        poly[2 * len(m):] += weight * factor
    return poly


def target_poly(N: int, M: int, a: complex, b: complex) -> np.ndarray:
    """Coefficients of (lam - a)^{N-M} (lam - b)^M."""
    return np.poly(np.array([a] * (N - M) + [b] * M, dtype=complex)) if N else np.ones(1, dtype=complex)


def power_traces(Y, kmax: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=complex)
    out = np.empty(kmax + 1, dtype=complex)
    P = np.eye(Y.shape[0], dtype=complex)
    for k in range(kmax + 1):
        out[k] = np.trace(P)
        P = P @ Y
    return out


def newton_residual(J, Y) -> complex:
    """sum_{k=0}^N J_{N-k} tr Y^k, which vanishes by Cayley-Hamilton."""
    J = np.asarray(J, dtype=complex)
    N = len(J) - 1
    p = power_traces(Y, N)
    return complex(sum(J[N - k] * p[k] for k in range(N + 1)))


def rs_integrals(x, v, eta, k: int) -> complex:
    """eta^{-1} tr Y_RS^k."""
    if k < 0:
        raise ValueError("k must be non-negative")
    Y = rs_lax(x, v, eta)
    return complex(np.trace(np.linalg.matrix_power(Y, k)) / eta)


def cm_integrals(x, v, k: int) -> complex:
    """tr Y_CM^k / k."""
    if k < 1:
        raise ValueError("k must be positive")
    Y = cm_lax(x, v)
    return complex(np.trace(np.linalg.matrix_power(Y, k)) / k)


def _rs_products(x, eta) -> np.ndarray:
    d = _pair_differences(x)
    off = ~np.eye(len(x), dtype=bool)
    return np.prod(np.where(off, (d + eta) / np.where(off, d, 1.0), 1.0), axis=1)


def rs_hamiltonian(x, p, eta) -> complex:
    """eta^{-1} sum_i exp(-eta p_i) prod_{k != i} (x_i - x_k + eta)/(x_i - x_k)."""
    x, p, eta = _rs_inputs(x, p, eta)
    return complex(np.sum(np.exp(-eta * p) * _rs_products(x, eta)) / eta)


def velocity_from_momentum(x, p, eta) -> np.ndarray:
    """v_i = -exp(-eta p_i) prod_{k != i} (x_i - x_k + eta)/(x_i - x_k)."""
    x, p, eta = _rs_inputs(x, p, eta)
    return -np.exp(-eta * p) * _rs_products(x, eta)


def momentum_from_velocity(x, v, eta) -> np.ndarray:
    """Inverse of velocity_from_momentum on the principal logarithm branch.

    Momenta are only defined up to integer multiples of 2 pi i / eta; the
    returned values use the principal branch of log.
    """
    x, v, eta = _rs_inputs(x, v, eta)
    if np.any(v == 0):
        raise ValueError("zero velocity has no momentum (log of 0)")
    prods = _rs_products(x, eta)
    if np.any(prods == 0):
        raise ValueError("singular configuration: vanishing velocity prefactor")
    return -np.log(-v / prods) / eta


MOMENTUM_BRANCH_PERIOD = "2*pi*i/eta"


def rs_acceleration(x, v, eta) -> np.ndarray:
    """Right-hand side of the RS equations of motion."""
    d = _pair_differences(x)
    off = ~np.eye(len(x), dtype=bool)
    dd = np.where(off, d, 2 * abs(eta) + 1.0)  # diagonal filler never hits 0 or +-eta
    terms = np.where(off, 2 * eta**2 * v[:, None] * v[None, :] / (dd * (dd**2 - eta**2)), 0.0)
    return -terms.sum(axis=1)


def cm_acceleration(x, v=None) -> np.ndarray:
    """Right-hand side of the CM equations of motion: -sum_k 2/(x_i - x_k)^3."""
    d = _pair_differences(x)
    off = ~np.eye(len(x), dtype=bool)
    return -np.where(off, 2.0 / np.where(off, d, 1.0) ** 3, 0.0).sum(axis=1)


@dataclass
class Trajectory:
    kind: str
    eta: complex | None
    dt: float
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def append(self, t, x, v):
        self.t.append(t)
        self.x.append(x.copy())
        self.v.append(v.copy())

    def __len__(self):
        return len(self.t)

    def lax(self, k: int) -> np.ndarray:
        if self.kind == "RS":
            return rs_lax(self.x[k], self.v[k], self.eta)
        return cm_lax(self.x[k], self.v[k])


class CollisionError(RuntimeError):
    """Integration stopped near a singular configuration.

    ``trajectory`` holds every state accepted before the abort.
    """

    def __init__(self, message: str, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def _min_separation(x, eta) -> float:
    d = _pair_differences(x)
    n = len(x)
    iu = np.triu_indices(n, 1)
    seps = [np.abs(d[iu])]
    if eta is not None:
        seps += [np.abs(d[iu] - eta), np.abs(d[iu] + eta)]
    return float(min(s.min() for s in seps)) if n > 1 else np.inf


def _passed_through(x_old, x_new) -> bool:
    """Real particles swapping order within one step went through a collision."""
    if np.any(x_old.imag != 0) or np.any(x_new.imag != 0):
        return False
    return not np.array_equal(np.argsort(x_old.real), np.argsort(x_new.real))


def _rk4_step(accel, x, v, h):
    k1x, k1v = v, accel(x, v)
    k2x, k2v = v + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
    k3x, k3v = v + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
    k4x, k4v = v + h * k3v, accel(x + h * k3x, v + h * k3v)
    return (x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))


def integrate(kind: Kind, x0, v0, t_end: float, dt: float, eta=None, min_sep: float = 1e-6,
              max_halvings: int = 0) -> Trajectory:
    """Classical RK4 on (x, v) for the RS or CM equations of motion.

    A step that brings two particles (or, for RS, a pair at distance eta)
    closer than ``min_sep`` is retried with the step halved up to
    ``max_halvings`` times; if that fails a CollisionError carries the
    trajectory accepted so far.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if kind not in ("RS", "CM"):
        raise ValueError(f"kind must be 'RS' or 'CM', got {kind!r}")
    x = as_complex_vector(x0, "x").copy()
    v = as_complex_vector(v0, "v").copy()
    if kind == "RS":
        if eta is None:
            raise ValueError("RS integration needs eta")
        eta = complex(eta)
        check_general_position(x, eta)

        def accel(xx, vv):
            return rs_acceleration(xx, vv, eta)
    else:
        eta = None
        check_distinct(x)
        accel = cm_acceleration
    if _min_separation(x, eta) < min_sep:
        raise ValueError("initial state is within min_sep of a singular configuration")

    traj = Trajectory(kind, eta, dt)
    t = 0.0
    traj.append(t, x, v)
    nsteps = int(round(t_end / dt))
    for _ in range(nsteps):
        sub = 1
        for _attempt in range(max_halvings + 1):
            h = dt / sub
            xn, vn = x, v
            ok = True
            for _s in range(sub):
                xp = xn
                xn, vn = _rk4_step(accel, xn, vn, h)
                if (_min_separation(xn, eta) < min_sep or not np.all(np.isfinite(vn))
                        or _passed_through(xp, xn)):
                    ok = False
                    break
            if ok:
                break
            sub *= 2
        if not ok:
            raise CollisionError(f"near collision at t={t:.6g}", traj)
        x, v = xn, vn
        t += dt
        traj.append(t, x, v)
    return traj


def lax_residual(traj: Trajectory, k: int) -> float:
    """max |dY/dt - [B, Y]| at point k, dY/dt by central differences over k-1, k+1."""
    if not 1 <= k <= len(traj) - 2:
        raise ValueError("need points k-1, k, k+1 on the trajectory")
    h = traj.t[k + 1] - traj.t[k - 1]
    Ydot = (traj.lax(k + 1) - traj.lax(k - 1)) / h
    Y = traj.lax(k)
    if traj.kind == "RS":
        B = rs_b_matrix(traj.x[k], traj.v[k], traj.eta)
    else:
        B = cm_b_matrix(traj.x[k])
    return float(np.abs(Ydot - (B @ Y - Y @ B)).max())
