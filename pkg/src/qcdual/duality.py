"""Quantum-classical duality checks and the inverse spectral problem.

Forward direction: substituting v_i = -H_i (a joint eigenvalue tuple of the
spin chain on V(M)) into the RS Lax matrix gives characteristic polynomial
(lam - w1)^{N-M} (lam - w2)^M. The comparison is done on polynomial
coefficients only; at the duality point the Lax matrix typically has Jordan
blocks, so eigenvalue-based checks are unreliable.

Inverse direction: solve the N polynomial equations for (H_1, ..., H_N) by
multi-start damped Newton and tag each root by whether it is a quantum
eigenvalue tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ._validation import as_complex_vector, check_general_position, check_sector
from .chain import ChainParams, GaudinParams, gaudin_hamiltonians, nonlocal_hamiltonians
from .classical import (
    cm_char_poly_closed,
    cm_lax,
    pair_weights,
    rs_char_poly_closed,
    rs_hamiltonian,
    rs_lax,
)
from .spectra import DEFAULT_SEED, JointSpectrumRecord, gaudin_joint_spectrum, joint_spectrum
from .tensorspace import max_norm

MATCH_TOL = 1e-6
DUALITY_TOL = 1e-7


def target_coefficients(N: int, M: int, w1: complex, w2: complex) -> np.ndarray:
    """C_n(N, M) for n = 0..N: coefficient of z^n in (1 + z w1)^{N-M} (1 + z w2)^M.

    Index 0 holds C_0 = 1.
    """
    check_sector(M, N)
    C = np.zeros(N + 1, dtype=complex)
    for n in range(N + 1):
        C[n] = sum(comb(N - M, k) * comb(M, n - k) * w1**k * w2 ** (n - k)
                   for k in range(max(0, n - M), min(n, N - M) + 1))
    return C


def target_polynomial(N: int, M: int, a: complex, b: complex) -> np.ndarray:
    """Coefficients of (lam - a)^{N-M} (lam - b)^M, i.e. (-1)^n C_n."""
    C = target_coefficients(N, M, a, b)
    return C * (-1.0) ** np.arange(N + 1)


def qc7_sums(x, H, eta) -> np.ndarray:
    """Left-hand sides of the inverse system for n = 0..N.

    sum_{|S|=n} prod_{i in S} H_i prod_{a<b in S} (1 - eta^2/x_ab^2)^{-1}.
    """
    J = rs_char_poly_closed(x, H, eta)
    return J * (-1.0) ** np.arange(len(J))


def _subset_tables(N: int, w: np.ndarray):
    """Per n = 1..N: (index array of all n-subsets, their pair-weight products)."""
    tables = []
    for n in range(1, N + 1):
        subsets = np.array(list(combinations(range(N), n)), dtype=int)
        weights = np.ones(len(subsets), dtype=complex)
        for a, b in combinations(range(n), 2):
            weights *= w[subsets[:, a], subsets[:, b]]
        tables.append((subsets, weights))
    return tables


def _system(H: np.ndarray, tables, C: np.ndarray):
    """Residual F_n = lhs_n(H) - C_n (n = 1..N) and its Jacobian."""
    N = len(H)
    F = np.empty(N, dtype=complex)
    Jac = np.zeros((N, N), dtype=complex)
    for n, (subsets, weights) in enumerate(tables, start=1):
        vals = H[subsets]
        F[n - 1] = np.dot(weights, np.prod(vals, axis=1)) - C[n]
        # product of the other factors in each subset, via prefix/suffix products
        ones = np.ones((len(vals), 1), dtype=complex)
        left = np.cumprod(np.hstack([ones, vals[:, :-1]]), axis=1)
        right = np.cumprod(np.hstack([ones, vals[:, :0:-1]]), axis=1)[:, ::-1]
        np.add.at(Jac[n - 1], subsets, weights[:, None] * left * right)
    return F, Jac


@dataclass
class DualityReport:
    M: int
    distances: list = field(default_factory=list)
    tol: float = DUALITY_TOL

    @property
    def max_distance(self) -> float:
        return max(self.distances, default=0.0)

    @property
    def passed(self) -> bool:
        return all(d < self.tol for d in self.distances)


def coefficient_distance(poly: np.ndarray, target: np.ndarray) -> float:
    """max |poly - target| relative to max(1, max |target|)."""
    return float(np.max(np.abs(poly - target)) / max(1.0, np.max(np.abs(target))))


def verify_duality(p: ChainParams, M: int, records: list[JointSpectrumRecord] | None = None,
                   tol: float = DUALITY_TOL) -> DualityReport:
    """Check det(lam - Y_RS(x, -H)) = (lam - w1)^{N-M} (lam - w2)^M for each record."""
    check_sector(M, p.N)
    if records is None:
        records = joint_spectrum(p, M)
    target = target_polynomial(p.N, M, p.w1, p.w2)
    report = DualityReport(M, tol=tol)
    for r in records:
        if r.M != M or len(r.H) != p.N:
            raise ValueError("record does not belong to this sector / chain")
        report.distances.append(coefficient_distance(rs_char_poly_closed(p.xs, r.H, p.eta), target))
    return report


def verify_gaudin_duality(p: GaudinParams, M: int, records: list[JointSpectrumRecord] | None = None,
                          tol: float = DUALITY_TOL) -> DualityReport:
    """Check det(lam - Y_CM(x, -H^G)) = (lam - omega1)^{N-M} (lam - omega2)^M."""
    check_sector(M, p.N)
    if records is None:
        records = gaudin_joint_spectrum(p, M)
    target = target_polynomial(p.N, M, p.omega1, p.omega2)
    report = DualityReport(M, tol=tol)
    for r in records:
        if r.M != M or len(r.H) != p.N:
            raise ValueError("record does not belong to this sector / chain")
        report.distances.append(coefficient_distance(cm_char_poly_closed(p.xs, r.H), target))
    return report


def vacuum_eigenvalues(p: ChainParams) -> np.ndarray:
    """H_i = w1 prod_{j != i} (1 + eta/(x_i - x_j)) on the all-up state."""
    xs = p.xs
    return np.array([p.w1 * np.prod([1 + p.eta / (xs[i] - xs[j]) for j in range(p.N) if j != i])
                     for i in range(p.N)])


@dataclass
class InverseSolution:
    H: np.ndarray
    residual: float
    uncertainty: float = 0.0
    matched: bool = False
    record_index: int | None = None
    hits: int = 1


@dataclass
class InverseResult:
    M: int
    solutions: list
    starts: int
    failed_starts: int

    @property
    def matched(self) -> list:
        return [s for s in self.solutions if s.matched]

    @property
    def unmatched(self) -> list:
        return [s for s in self.solutions if not s.matched]


def newton_polish(H0, tables, C, max_iter: int = 200, tol: float = 1e-13):
    """Damped Newton on the inverse system from H0.

    Returns (H, residual, last_step) or None. At a multiple root convergence is
    only linear and ``last_step`` estimates how far H may sit from the root.
    """
    H = np.array(H0, dtype=complex)
    scale = max(1.0, np.max(np.abs(C)))
    F, Jac = _system(H, tables, C)
    norm = np.max(np.abs(F)) / scale
    last_step = np.inf
    for _ in range(max_iter):
        if norm < tol:
            break
        try:
            step = np.linalg.solve(Jac, -F)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        alpha = 1.0
        while alpha > 1e-6:
            Hn = H + alpha * step
            Fn, Jn = _system(Hn, tables, C)
            nn = np.max(np.abs(Fn)) / scale
            if nn < (1 - 0.25 * alpha) * norm or nn < tol:
                break
            alpha *= 0.5
        else:
            # no further decrease: accept a round-off floor, reject a stall
            if norm < 1e-9:
                break
            return None
        last_step = alpha * np.max(np.abs(step))
        H, F, Jac, norm = Hn, Fn, Jn, nn
    # one extra full step once converged tightens the last digits
    try:
        step = np.linalg.solve(Jac, -F)
        Hn = H + step
        Fn, _ = _system(Hn, tables, C)
        if np.max(np.abs(Fn)) / scale <= norm:
            H, norm = Hn, np.max(np.abs(Fn)) / scale
        last_step = np.max(np.abs(step))
    except np.linalg.LinAlgError:
        pass
    return H, float(norm), float(last_step)


def solve_inverse(p: ChainParams, M: int, starts: int = 200, seed: int = DEFAULT_SEED,
                  records: list[JointSpectrumRecord] | None = None, accept: float = 1e-9,
                  match_tol: float = MATCH_TOL) -> InverseResult:
    """All roots of the inverse spectral system reachable from ``starts`` Newton runs.

    Half the starts are uniform in a complex disk of radius
    max(|w1|, |w2|) (1 + |eta| / min gap); the other half are quantum
    eigenvalue tuples with noise. Roots closer than ``match_tol`` are merged
    (the radius grows to the Newton step size at slowly converging multiple
    roots). Every root is kept; ``matched`` marks those equal to a quantum
    record within ``match_tol``.
    """
    check_sector(M, p.N)
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if records is None:
        records = joint_spectrum(p, M)
    xs, N = p.xs, p.N
    tables = _subset_tables(N, pair_weights(xs, p.eta))
    C = target_coefficients(N, M, p.w1, p.w2)
    rng = np.random.default_rng(seed)

    d = np.abs(xs[:, None] - xs[None, :])
    gap = d[np.triu_indices(N, 1)].min() if N > 1 else 1.0
    radius = max(abs(p.w1), abs(p.w2)) * (1 + abs(p.eta) / gap)

    seeds = []
    n_random = starts - starts // 2 if records else starts
    for _ in range(n_random):
        r = radius * np.sqrt(rng.uniform(size=N))
        seeds.append(r * np.exp(2j * np.pi * rng.uniform(size=N)))
    for k in range(starts - n_random):
        base = records[k % len(records)].H
        noise = 0.05 * radius * (rng.normal(size=N) + 1j * rng.normal(size=N))
        seeds.append(base + noise)

    solutions: list[InverseSolution] = []
    failed = 0
    for H0 in seeds:
        out = newton_polish(H0, tables, C)
        if out is None or out[1] > accept:
            failed += 1
            continue
        H, res, unc = out
        for s in solutions:
            merge = max(match_tol, 10 * (s.uncertainty + unc))
            if np.max(np.abs(s.H - H)) < merge:
                s.hits += 1
                if res < s.residual:
                    s.H, s.residual, s.uncertainty = H, res, unc
                break
        else:
            solutions.append(InverseSolution(H, res, unc))

    for s in solutions:
        for idx, r in enumerate(records):
            if np.max(np.abs(s.H - r.H)) < match_tol:
                s.matched, s.record_index = True, idx
                break
    solutions.sort(key=lambda s: (not s.matched, tuple((h.real, h.imag) for h in s.H)))
    return InverseResult(M, solutions, starts, failed)


@dataclass
class LimitRow:
    eta: float
    hamiltonian_error: float
    lax_error: float
    energy_error: float


@dataclass
class LimitTable:
    rows: list

    def _slope(self, attr: str) -> float:
        etas = np.log([r.eta for r in self.rows])
        errs = np.log([getattr(r, attr) for r in self.rows])
        return float(np.polyfit(etas, errs, 1)[0])

    @property
    def hamiltonian_order(self) -> float:
        return self._slope("hamiltonian_error")

    @property
    def lax_order(self) -> float:
        return self._slope("lax_error")

    @property
    def energy_order(self) -> float:
        return self._slope("energy_error")


def limit_checks(x, omega1: complex, omega2: complex, etas, v_cm=None, p=None) -> LimitTable:
    """Convergence of the RS chain objects to their Gaudin / CM limits as eta -> 0.

    For each eta, with twist g = exp(eta h), h = diag(omega1, omega2):

    * hamiltonian_error: max_i ||(H_i - I)/eta - H_i^G||, expected O(eta);
    * lax_error: ||(Y_RS(x, -1 + eta v) - I)/eta - Y_CM(x, v)||, expected O(eta);
    * energy_error: |eta H_1^RS(x, p) - N - eta tr Y_CM(x, v_p)| where
      v_p,i = p_i - sum_{k != i} 1/(x_i - x_k), expected O(eta^2).
    """
    xs = as_complex_vector(x)
    etas = [float(e) for e in etas]
    if any(e <= 0 for e in etas) or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta sequence must be positive and strictly decreasing")
    N = len(xs)
    rng = np.random.default_rng(DEFAULT_SEED)
    v_cm = rng.normal(size=N) if v_cm is None else as_complex_vector(v_cm)
    p = rng.normal(size=N) if p is None else as_complex_vector(p)

    gp = GaudinParams(tuple(xs), omega1, omega2)
    HG = gaudin_hamiltonians(gp)
    Ycm = cm_lax(xs, v_cm)
    d = xs[:, None] - xs[None, :]
    off = ~np.eye(N, dtype=bool)
    v_p = p - np.where(off, 1.0 / np.where(off, d, 1.0), 0.0).sum(axis=1)
    trY_p = np.trace(cm_lax(xs, v_p))

    rows = []
    for eta in etas:
        check_general_position(xs, eta)
        cp = ChainParams(tuple(xs), eta, np.exp(eta * omega1), np.exp(eta * omega2))
        ident = np.eye(2**N)
        ham_err = max(max_norm((H - ident) / eta - G) for H, G in zip(nonlocal_hamiltonians(cp), HG))
        Yrs = rs_lax(xs, -1 + eta * v_cm, eta)
        lax_err = max_norm((Yrs - np.eye(N)) / eta - Ycm)
        energy_err = abs(eta * rs_hamiltonian(xs, p, eta) - N - eta * trY_p)
        rows.append(LimitRow(eta, ham_err, lax_err, float(energy_err)))
    return LimitTable(rows)
