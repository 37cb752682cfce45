"""Acceptance criteria, one test each. Every test prints a single
``[ACn] PASS|FAIL ...`` line (visible even under pytest's output capture)."""

import time
from math import comb

import numpy as np
import pytest

from conftest import general_position_x, random_chain, random_gaudin
from qcdual import ChainParams, GaudinParams
from qcdual.bethe import HomogeneousChain, bethe_vs_oracle, eigenvalues_from_roots, solve_bethe
from qcdual.chain import nonlocal_hamiltonians, transfer_matrix
from qcdual.classical import (
    cauchy_det, cauchy_det_direct, char_poly, integrate, lax_residual, newton_residual,
    rs_char_poly_closed, rs_char_poly_eps, rs_integrals, rs_lax,
)
from qcdual.duality import limit_checks, solve_inverse, verify_duality, verify_gaudin_duality
from qcdual.spectra import full_joint_spectrum, gaudin_joint_spectrum, joint_spectrum, sum_rule_residual, xxx_spectrum
from qcdual.tensorspace import commutator, magnon_number, max_norm, site_operator_sum


@pytest.fixture
def verdict(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(1.0, np.max(np.abs(b))))


def test_ac1_golden_spectrum(verdict):
    t0 = time.perf_counter()
    p = ChainParams((0.0, 2.0), eta=1.0, w1=2.0, w2=1.0)
    spec = full_joint_spectrum(p)
    elapsed = time.perf_counter() - t0
    s3 = np.sqrt(3.0)
    R = (2 - 1) ** 2 + 4 * 1 * 2 * 1 / (0 - 2) ** 2
    expected = {
        0: [(1.0, 3.0)],
        1: sorted([((3 - s3) / 2, (3 + s3) / 2), ((3 + s3) / 2, (3 - s3) / 2)]),
        2: [(0.5, 1.5)],
    }
    dev = 0.0
    for M, recs in spec.items():
        got = sorted(tuple(r.H) for r in recs)
        dev = max(dev, float(np.max(np.abs(np.array(got) - np.array(expected[M])))))
    ok = dev < 1e-9 and elapsed < 1.0 and R == 3
    verdict("AC1", ok, f"golden N=2 spectrum max dev {dev:.2e} (tol 1e-9), R={R:g}, {elapsed:.3f}s (< 1s)")


def test_ac2_forward_duality_sweep(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2002)
    worst, count = 0.0, 0
    for N in range(1, 6):
        for _ in range(50):
            p = random_chain(rng, N)
            hams = nonlocal_hamiltonians(p)
            for M in range(N + 1):
                rep = verify_duality(p, M, joint_spectrum(p, M, hamiltonians=hams))
                worst = max(worst, rep.max_distance)
                count += len(rep.distances)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-7 and elapsed < 120
    verdict("AC2", ok, f"RS duality, N=1..5 x 50 draws, {count} records: worst rel dist {worst:.2e} "
                       f"(tol 1e-7), {elapsed:.1f}s (< 120s)")


def test_ac3_gaudin_duality_sweep(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3003)
    worst, count = 0.0, 0
    for N in range(1, 6):
        for _ in range(50):
            p = random_gaudin(rng, N)
            for M in range(N + 1):
                rep = verify_gaudin_duality(p, M)
                worst = max(worst, rep.max_distance)
                count += len(rep.distances)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-7 and elapsed < 120
    verdict("AC3", ok, f"CM/Gaudin duality, N=1..5 x 50 draws, {count} records: worst rel dist {worst:.2e} "
                       f"(tol 1e-7), {elapsed:.1f}s (< 120s)")


def test_ac4_inverse_recovery(verdict):
    rng = np.random.default_rng(4004)
    problems = []
    for N in range(1, 5):
        p = random_chain(rng, N)
        for M in range(N + 1):
            res = solve_inverse(p, M, starts=200)
            found = len({s.record_index for s in res.matched})
            if found != comb(N, M):
                problems.append(f"N={N} M={M}: {found}/{comb(N, M)}")
    # two-site chain: the extra roots are the lower-sign branches
    g = ChainParams((0.0, 2.0), eta=1.0, w1=2.0, w2=1.0)
    x12 = -2.0
    extras = {0: [(2 - 2 / x12, 2 + 2 / x12)], 1: [], 2: [(1 - 1 / x12, 1 + 1 / x12)]}
    for M in range(3):
        res = solve_inverse(g, M, starts=200)
        got = [tuple(s.H) for s in res.unmatched]
        if len(res.matched) != comb(2, M) or len(got) != len(extras[M]) or any(
                np.max(np.abs(np.array(a) - np.array(b))) > 1e-6 for a, b in zip(got, extras[M])):
            problems.append(f"N=2 golden M={M}: unmatched {got}")
    verdict("AC4", not problems, "inverse recovery N<=4, 200 starts, all records matched; N=2 extras "
                                 "(3,1) at M=0 and (1.5,0.5) at M=2" + (f"; problems: {problems}" if problems else ""))


def test_ac5_bethe_cross_validation(verdict):
    rng = np.random.default_rng(5005)
    worst, sets, matched, total = 0.0, 0, 0, 0
    for N in (2, 3, 4):
        for _ in range(2):
            p = random_chain(rng, N)
            for M in range(N // 2 + 1):
                cmp = bethe_vs_oracle(p, M, starts=200)
                worst = max(worst, cmp.max_deviation)
                sets += cmp.n_roots
                matched += cmp.matched
                total += cmp.n_records
    e_worst, e_sets = 0.0, 0
    for N in range(2, 7):
        h = HomogeneousChain(N, eta=1j)
        spectrum = xxx_spectrum(N)
        for M in range(1, N // 2 + 1):
            energies = np.array([E for E, m in spectrum if m == M])
            for r in solve_bethe(h, M, starts=200):
                E = eigenvalues_from_roots(h, r).energy
                e_worst = max(e_worst, float(np.min(np.abs(energies - E))))
                e_sets += 1
    ok = worst < 1e-7 and e_worst < 1e-8 and sets > 0 and e_sets > 0
    verdict("AC5", ok, f"Bethe vs oracle: {sets} root sets, worst dev {worst:.2e} (tol 1e-7), "
                       f"{matched}/{total} records reproduced; homogeneous N<=6: {e_sets} sets, "
                       f"worst energy dev {e_worst:.2e} (tol 1e-8)")


def test_ac6_closed_form_identities(verdict):
    rng = np.random.default_rng(6006)
    qc5 = eps = cauchy = newton = 0.0
    for N in range(1, 9):
        for _ in range(100):
            eta = rng.uniform(0.1, 2.0)
            x = general_position_x(rng, N, eta, margin=0.2)
            H = rng.normal(size=N)
            J = rs_char_poly_closed(x, H, eta)
            Y = rs_lax(x, -H, eta)
            qc5 = max(qc5, rel(J, char_poly(Y)))
            newton = max(newton, abs(newton_residual(J, Y)))
        for _ in range(20):
            eta = rng.uniform(0.1, 2.0)
            x = general_position_x(rng, N, eta, margin=0.2)
            d = cauchy_det_direct(x, eta)
            cauchy = max(cauchy, abs(cauchy_det(x, eta) - d) / max(1.0, abs(d)))
            if N <= 6:
                H = rng.normal(size=N)
                eps = max(eps, rel(rs_char_poly_eps(x, H, eta), rs_char_poly_closed(x, H, eta)))
    ok = qc5 < 1e-10 and eps < 1e-12 and cauchy < 1e-12 and newton < 1e-9
    verdict("AC6", ok, f"minor-sum vs Faddeev-LeVerrier {qc5:.1e} (1e-10), eps-sum vs minor-sum {eps:.1e} "
                       f"(1e-12), Cauchy det {cauchy:.1e} (1e-12), Newton residual {newton:.1e} (1e-9)")


def test_ac7_rs_dynamics(verdict):
    x0, v0, eta = np.array([0.0, 1.7, 3.9]), np.array([0.6, -0.4, 0.3]), 0.8
    traj = integrate("RS", x0, v0, 1.0, 1e-3, eta=eta)
    ev0 = np.sort_complex(np.linalg.eigvals(traj.lax(0)))
    ev1 = np.sort_complex(np.linalg.eigvals(traj.lax(len(traj) - 1)))
    eig_drift = float(np.max(np.abs(ev1 - ev0)))
    h_drift = abs(rs_integrals(traj.x[-1], traj.v[-1], eta, 1) - rs_integrals(traj.x[0], traj.v[0], eta, 1))
    res = []
    for dt in (2e-3, 1e-3):
        t = integrate("RS", x0, v0, 0.5, dt, eta=eta)
        res.append(lax_residual(t, (len(t) - 1) // 2))
    ratio = res[0] / res[1]
    ok = eig_drift < 1e-8 and h_drift < 1e-8 and abs(ratio - 4) < 0.5
    verdict("AC7", ok, f"RS N=3: eigenvalue drift {eig_drift:.1e}, H1 drift {h_drift:.1e} (tol 1e-8), "
                       f"Lax residual ratio {ratio:.3f} (4 +/- 0.5)")


def test_ac8_limits(verdict):
    etas = [1e-1, 1e-2, 1e-3, 1e-4]
    orders = []
    exact = True
    for N, x in ((1, [0.3]), (2, [0.0, 1.3]), (3, [0.0, 1.1, 2.6])):
        table = limit_checks(x, 0.4, -0.3, etas)
        if N == 1:
            # with one particle the Lax limit is exact, so no order can be measured
            exact = all(r.lax_error < 1e-12 for r in table.rows)
            orders.append(("H", N, table.hamiltonian_order))
        else:
            orders += [("H", N, table.hamiltonian_order), ("Y", N, table.lax_order)]
    ok = exact and all(abs(o - 1.0) <= 0.1 for _, _, o in orders)
    txt = ", ".join(f"{k}{n}={o:.3f}" for k, n, o in orders)
    verdict("AC8", ok, f"eta->0 convergence orders (1.0 +/- 0.1): {txt}; N=1 Lax limit exact: {exact}")


def test_ac9_algebraic_structure(verdict):
    rng = np.random.default_rng(9009)
    comm = summ = 0.0
    for N in range(1, 6):
        x = general_position_x(rng, N, eta=0.6, width=2.0)
        p = ChainParams(tuple(x), 0.6, 1.4 + 0.1j, 0.8)
        hams = nonlocal_hamiltonians(p)
        Mop = magnon_number(N)
        for i, A in enumerate(hams):
            comm = max(comm, max_norm(commutator(A, Mop)))
            for B in hams[i + 1:]:
                comm = max(comm, max_norm(commutator(A, B)))
        a, b = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        comm = max(comm, max_norm(commutator(transfer_matrix(p, a), transfer_matrix(p, b))))
        summ = max(summ, max_norm(sum(hams) - site_operator_sum(p.twist, N)))
        for M in range(N + 1):
            for r in joint_spectrum(p, M, hamiltonians=hams):
                summ = max(summ, sum_rule_residual(p, r))
    ok = comm < 1e-10 and summ < 1e-10
    verdict("AC9", ok, f"N<=5 max commutator {comm:.1e}, sum rule {summ:.1e} (tol 1e-10)")
