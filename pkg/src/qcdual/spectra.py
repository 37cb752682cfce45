"""Joint spectra of the commuting chain Hamiltonians, sector by sector.

This is the brute-force oracle that the duality and Bethe-ansatz checks are
compared against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

from ._validation import check_finite_square, check_sector
from .chain import ChainParams, GaudinParams, gaudin_hamiltonians, nonlocal_hamiltonians
from .tensorspace import heisenberg_hamiltonian, sector_basis

log = logging.getLogger(__name__)

DEFAULT_SEED = 1234
DEGENERACY_TOL = 1e-7
MAX_DRAWS = 5
SORT_FUZZ = 1e-9


class SpectrumError(RuntimeError):
    pass


@dataclass
class JointSpectrumRecord:
    """One joint eigenvector of H_1..H_N inside the sector V(M)."""

    M: int
    H: np.ndarray
    vec: np.ndarray
    residual: float

    def as_tuple(self) -> tuple:
        return tuple(complex(h) for h in self.H)


def eigendecompose(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and right eigenvectors (columns) of a general complex matrix.

    Raises SpectrumError if LAPACK fails to converge or returns non-finite output.
    """
    A = check_finite_square(A)
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver did not converge: {exc}") from exc
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(vecs))):
        raise SpectrumError("eigensolver returned non-finite values")
    return vals, vecs


def eigen_residual(A, vals, vecs) -> float:
    """max_k ||A v_k - l_k v_k|| / (||A|| ||v_k||)."""
    A = np.asarray(A)
    scale = max(np.linalg.norm(A, 2), 1e-300)
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    return float(np.max(res) / scale) if len(vals) else 0.0


def _fuzzy_cmp(a: tuple, b: tuple) -> int:
    for u, v in zip(a, b):
        for s, t in ((u.real, v.real), (u.imag, v.imag)):
            if abs(s - t) > SORT_FUZZ:
                return -1 if s < t else 1
    return 0


def sort_records(records: list[JointSpectrumRecord]) -> list[JointSpectrumRecord]:
    """Lexicographic order on (Re H_1, Im H_1, Re H_2, ...), ties within 1e-9."""
    return sorted(records, key=cmp_to_key(lambda r, s: _fuzzy_cmp(r.as_tuple(), s.as_tuple())))


def _min_gap(vals: np.ndarray) -> float:
    if len(vals) < 2:
        return np.inf
    d = np.abs(vals[:, None] - vals[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def joint_diagonalize(blocks: list[np.ndarray], M: int, seed: int = DEFAULT_SEED,
                      tol: float = 1e-8) -> list[JointSpectrumRecord]:
    """Joint eigenpairs of commuting matrices via one random linear combination.

    Each H_i is read off as a Rayleigh quotient on the eigenvectors of
    sum_i c_i H_i. A combination with nearly coincident eigenvalues is redrawn
    up to MAX_DRAWS times; after that the decomposition is kept only if every
    vector is a joint eigenvector to ``tol`` (a genuine joint degeneracy).
    """
    rng = np.random.default_rng(seed)
    n = len(blocks)
    dim = blocks[0].shape[0]
    scale = max(1.0, max(np.abs(b).max() for b in blocks))
    for attempt in range(MAX_DRAWS):
        c = rng.normal(size=n) + 1j * rng.normal(size=n)
        A = sum(ci * B for ci, B in zip(c, blocks))
        vals, vecs = eigendecompose(A)
        degenerate = _min_gap(vals) < DEGENERACY_TOL * scale * np.abs(c).max()
        if degenerate and attempt < MAX_DRAWS - 1:
            log.debug("degenerate combination in sector M=%d, redrawing (attempt %d)", M, attempt + 1)
            continue
        records = []
        for k in range(dim):
            v = vecs[:, k]
            nv = np.vdot(v, v).real
            H = np.array([np.vdot(v, B @ v) / nv for B in blocks])
            res = max(np.linalg.norm(B @ v - h * v) for B, h in zip(blocks, H)) / np.sqrt(nv)
            records.append(JointSpectrumRecord(M, H, v / np.sqrt(nv), float(res)))
        worst = max(r.residual for r in records)
        if worst < tol * scale:
            return sort_records(records)
        if not degenerate:
            raise SpectrumError(f"sector M={M}: joint eigenvector residual {worst:.2e} too large")
    raise SpectrumError(f"sector M={M}: no separating combination after {MAX_DRAWS} draws")


def joint_spectrum(p: ChainParams, M: int, seed: int = DEFAULT_SEED,
                   hamiltonians: list[np.ndarray] | None = None) -> list[JointSpectrumRecord]:
    """Joint spectrum (H_1, ..., H_N) of the non-local Hamiltonians on V(M)."""
    check_sector(M, p.N)
    hams = nonlocal_hamiltonians(p) if hamiltonians is None else hamiltonians
    basis = sector_basis(p.N, M)
    return joint_diagonalize([basis.restrict(H) for H in hams], M, seed)


def gaudin_joint_spectrum(p: GaudinParams, M: int, seed: int = DEFAULT_SEED,
                          hamiltonians: list[np.ndarray] | None = None) -> list[JointSpectrumRecord]:
    """Joint spectrum of the Gaudin Hamiltonians on V(M)."""
    check_sector(M, p.N)
    hams = gaudin_hamiltonians(p) if hamiltonians is None else hamiltonians
    basis = sector_basis(p.N, M)
    return joint_diagonalize([basis.restrict(H) for H in hams], M, seed)


def full_joint_spectrum(p: ChainParams, seed: int = DEFAULT_SEED) -> dict[int, list[JointSpectrumRecord]]:
    hams = nonlocal_hamiltonians(p)
    return {M: joint_spectrum(p, M, seed, hams) for M in range(p.N + 1)}


def sum_rule_residual(p: ChainParams, record: JointSpectrumRecord) -> float:
    """|sum_i H_i - ((N-M) w1 + M w2)|."""
    expected = (p.N - record.M) * p.w1 + record.M * p.w2
    return abs(np.sum(record.H) - expected)


def xxx_spectrum(N: int) -> list[tuple[float, int]]:
    """All (E, M) pairs of the periodic Heisenberg chain, sorted by M then E."""
    H = heisenberg_hamiltonian(N)
    out = []
    for M in range(N + 1):
        block = sector_basis(N, M).restrict(H)
        out.extend((float(E), M) for E in np.linalg.eigvalsh(block))
    return out
