from math import comb

import numpy as np
import pytest

from conftest import random_chain, random_gaudin
from qcdual import ChainParams, GaudinParams
from qcdual.spectra import (
    SpectrumError, eigen_residual, eigendecompose, full_joint_spectrum, gaudin_joint_spectrum,
    joint_diagonalize, joint_spectrum, sort_records, sum_rule_residual, xxx_spectrum,
)

SQ3 = np.sqrt(3.0)


def test_eigendecompose_examples(rng):
    vals, _ = eigendecompose(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(np.sort(vals.real), [1, 2, 3])
    vals, _ = eigendecompose([[0, 1], [1, 0]])
    assert np.allclose(np.sort(vals.real), [-1, 1])
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    vals, vecs = eigendecompose(A)
    assert eigen_residual(A, vals, vecs) * np.linalg.norm(A, 2) < 1e-9


def test_eigendecompose_rejects_bad_input():
    with pytest.raises(ValueError):
        eigendecompose(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigendecompose([[np.nan, 0], [0, 1]])


def _tuples(records):
    return [tuple(np.round(r.H.real, 12)) for r in records]


def test_golden_two_site_spectrum(golden):
    spec = full_joint_spectrum(golden)
    assert np.allclose(spec[0][0].H, [1, 3], atol=1e-9)
    assert np.allclose(spec[2][0].H, [0.5, 1.5], atol=1e-9)
    m1 = sorted(_tuples(spec[1]))
    assert np.allclose(m1, [((3 - SQ3) / 2, (3 + SQ3) / 2), ((3 + SQ3) / 2, (3 - SQ3) / 2)], atol=1e-9)


def test_golden_spectrum_closed_form():
    # random two-site chains against the closed-form joint spectrum
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = random_chain(rng, 2)
        w1, w2, eta = p.w1, p.w2, p.eta
        x12 = p.x[0] - p.x[1]
        R = (w1 - w2) ** 2 + 4 * eta**2 * w1 * w2 / x12**2
        spec = full_joint_spectrum(p)
        assert np.allclose(spec[0][0].H, [w1 + eta * w1 / x12, w1 - eta * w1 / x12])
        assert np.allclose(spec[2][0].H, [w2 + eta * w2 / x12, w2 - eta * w2 / x12])
        got = sorted(spec[1][k].H[0].real for k in range(2))
        assert np.allclose(got, sorted([(w1 + w2 - np.sqrt(R)).real / 2, (w1 + w2 + np.sqrt(R)).real / 2]))


def test_single_site():
    p = ChainParams((0.4,), eta=0.3, w1=1.5, w2=-0.5)
    assert np.allclose(joint_spectrum(p, 0)[0].H, [1.5])
    assert np.allclose(joint_spectrum(p, 1)[0].H, [-0.5])


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_completeness_and_record_invariants(N):
    rng = np.random.default_rng(N)
    p = random_chain(rng, N, complex_twist=True)
    spec = full_joint_spectrum(p)
    assert sum(len(v) for v in spec.values()) == 2**N
    for M, recs in spec.items():
        assert len(recs) == comb(N, M)
        for r in recs:
            assert r.M == M
            assert r.residual < 1e-9
            assert sum_rule_residual(p, r) < 1e-10
            assert abs(np.linalg.norm(r.vec) - 1) < 1e-12


def test_records_are_sorted(rng):
    p = random_chain(rng, 3)
    recs = joint_spectrum(p, 1)
    keys = [(r.H[0].real, r.H[0].imag) for r in recs]
    assert keys == sorted(keys)
    assert [r.as_tuple() for r in sort_records(recs[::-1])] == [r.as_tuple() for r in recs]


def test_seed_independence(rng):
    p = random_chain(rng, 3, complex_twist=True)
    a = joint_spectrum(p, 1, seed=1)
    b = joint_spectrum(p, 1, seed=2)
    assert np.allclose([r.H for r in a], [r.H for r in b], atol=1e-9)


def test_relabeling_sites_permutes_spectrum(rng):
    p = random_chain(rng, 3, complex_twist=True)
    sigma = [2, 0, 1]
    q = p.with_x([p.x[s] for s in sigma])
    for M in range(4):
        a = sorted(tuple(np.round(r.H[sigma], 8)) for r in joint_spectrum(p, M))
        b = sorted(tuple(np.round(r.H, 8)) for r in joint_spectrum(q, M))
        assert np.allclose(np.array(a, dtype=complex), np.array(b, dtype=complex), atol=1e-8)


def test_untwisted_two_site_degeneracy():
    p = ChainParams((0.0, 2.0), eta=1.0, w1=1.0, w2=1.0)
    spec = full_joint_spectrum(p)
    h1 = np.array([r.H[0] for recs in spec.values() for r in recs])
    target = 1 + 1.0 / (0.0 - 2.0)
    assert np.sum(np.abs(h1 - target) < 1e-9) == 3


def test_joint_diagonalize_accepts_true_degeneracy():
    blocks = [np.eye(3, dtype=complex), 2 * np.eye(3, dtype=complex)]
    recs = joint_diagonalize(blocks, M=0)
    assert len(recs) == 3
    assert all(np.allclose(r.H, [1, 2]) and r.residual < 1e-12 for r in recs)


def test_joint_diagonalize_rejects_non_commuting():
    A = np.array([[1, 1], [0, 2]], dtype=complex)
    B = np.array([[0, 0], [1, 0]], dtype=complex)
    with pytest.raises(SpectrumError):
        joint_diagonalize([A, B], M=0)


def test_sector_out_of_range(golden):
    with pytest.raises(ValueError):
        joint_spectrum(golden, 3)


def test_gaudin_spectrum_examples():
    p = GaudinParams((0.0, 1.0), omega1=1.0, omega2=0.0)
    recs = gaudin_joint_spectrum(p, 1)
    got = sorted(tuple(np.round(r.H.real, 10)) for r in recs)
    s5 = np.sqrt(5.0)
    assert np.allclose(got, [((1 - s5) / 2, (1 + s5) / 2), ((1 + s5) / 2, (1 - s5) / 2)])
    assert np.allclose(gaudin_joint_spectrum(p, 0)[0].H[0], 1.0 + 1 / (0.0 - 1.0))
    p1 = GaudinParams((0.3,), omega1=0.7, omega2=-1.1)
    assert np.allclose([gaudin_joint_spectrum(p1, M)[0].H[0] for M in (0, 1)], [0.7, -1.1])


def test_gaudin_sum_rule(rng):
    p = random_gaudin(rng, 4)
    for M in range(5):
        for r in gaudin_joint_spectrum(p, M):
            assert abs(np.sum(r.H) - ((4 - M) * p.omega1 + M * p.omega2)) < 1e-10


def test_xxx_spectrum_two_sites():
    E = sorted(e for e, _ in xxx_spectrum(2))
    assert np.allclose(E, [-4, 0, 0, 0])
    assert [e for e, M in xxx_spectrum(3) if M == 0] == [0.0]


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_xxx_one_magnon_energies(N):
    # v = cot(pi k / N) / 2 solves the one-magnon equation, with energy -4 / (1 + 4 v^2)
    E = np.array([e for e, M in xxx_spectrum(N) if M == 1])
    for k in range(1, N):
        v = 0.5 / np.tan(np.pi * k / N)
        assert np.min(np.abs(E + 4 / (1 + 4 * v**2))) < 1e-10
