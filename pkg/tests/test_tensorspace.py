from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcdual.tensorspace import (
    ID2, S1, S2, SMINUS, SPLUS, SX, SY, SZ,
    basis_state, commutator, embed_local, heisenberg_hamiltonian, magnon_number,
    max_norm, permutation, sector_basis, site_operator_sum,
)


def test_basis_convention():
    assert np.argmax(basis_state("++")) == 0
    assert np.argmax(basis_state("+-")) == 1
    assert np.argmax(basis_state("-+")) == 2
    with pytest.raises(ValueError):
        basis_state("+x")


def test_local_operators():
    assert np.allclose(SPLUS @ basis_state("-"), basis_state("+"))
    assert np.allclose(SMINUS @ basis_state("+"), basis_state("-"))
    assert np.allclose(S1 + S2, ID2)
    assert np.allclose(commutator(SX, SY), 1j * SZ)


def test_embed_identity():
    assert np.array_equal(embed_local(ID2, 1, 3), np.eye(8))


def test_embed_sz_single_site():
    assert np.allclose(embed_local(SZ, 1, 1), np.diag([0.5, -0.5]))


def test_embed_lowering_second_site():
    out = embed_local(SMINUS, 2, 2) @ basis_state("++")
    assert np.allclose(out, basis_state("+-"))


def test_embed_rejects_bad_input():
    with pytest.raises(ValueError):
        embed_local(ID2, 0, 2)
    with pytest.raises(ValueError):
        embed_local(np.eye(3), 1, 2)


def test_permutation_examples():
    P = permutation(1, 2, 2)
    assert np.allclose(P @ basis_state("+-"), basis_state("-+"))
    assert np.allclose(P @ basis_state("++"), basis_state("++"))
    with pytest.raises(ValueError):
        permutation(1, 1, 2)


def test_permutation_13_brute_force():
    P = permutation(1, 3, 3)
    for spins in ("".join(s) for s in product("+-", repeat=3)):
        swapped = spins[2] + spins[1] + spins[0]
        assert np.array_equal(P @ basis_state(spins), basis_state(swapped))


def test_permutation_from_swap_formula():
    # P = 1/2 + 2 sum_a s_a (x) s_a on two sites
    N = 3
    for i, j in [(1, 2), (1, 3), (2, 3)]:
        P = 0.5 * np.eye(8) + 2 * sum(embed_local(s, i, N) @ embed_local(s, j, N) for s in (SX, SY, SZ))
        assert max_norm(P - permutation(i, j, N)) < 1e-14


@pytest.mark.parametrize("N", [2, 3, 4])
def test_permutation_squares_to_identity(N):
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1):
            P = permutation(i, j, N)
            assert np.array_equal(P @ P, np.eye(2**N))


def test_magnon_number_examples():
    assert basis_state("++") @ magnon_number(2) @ basis_state("++") == 0
    assert basis_state("--") @ magnon_number(2) @ basis_state("--") == 2
    v = basis_state("+-+")
    assert np.allclose(magnon_number(3) @ v, v)


def test_sector_basis_examples():
    b = sector_basis(2, 1)
    assert len(b) == 2
    assert set(b.indices) == {np.argmax(basis_state("+-")), np.argmax(basis_state("-+"))}
    assert list(sector_basis(2, 0).indices) == [0]
    assert len(sector_basis(4, 2)) == 6
    with pytest.raises(ValueError):
        sector_basis(2, 3)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_sectors_partition_the_space(N):
    seen = np.concatenate([sector_basis(N, M).indices for M in range(N + 1)])
    assert sum(comb(N, M) for M in range(N + 1)) == 2**N
    assert sorted(seen) == list(range(2**N))


def test_restrict_and_lift():
    b = sector_basis(3, 1)
    vec = np.arange(3) + 1.0
    full = b.lift(vec)
    assert np.allclose(full[b.indices], vec)
    Mop = magnon_number(3)
    assert np.allclose(b.restrict(Mop), np.eye(3))


def test_heisenberg_two_sites():
    E = np.sort(np.linalg.eigvalsh(heisenberg_hamiltonian(2)))
    assert np.allclose(E, [-4, 0, 0, 0])


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_heisenberg_conserves_magnons(N):
    H = heisenberg_hamiltonian(N)
    assert max_norm(commutator(H, magnon_number(N))) < 1e-12
    assert np.allclose(H @ basis_state("+" * N), 0)


def test_heisenberg_four_sites_frozen():
    # frozen from a dense diagonalization; 0 five times is the spin-2 multiplet
    E = np.round(np.linalg.eigvalsh(heisenberg_hamiltonian(4)), 10)
    values, counts = np.unique(E, return_counts=True)
    assert dict(zip(values, counts)) == {-6.0: 1, -4.0: 3, -2.0: 7, 0.0: 5}


def test_site_operator_sum():
    assert np.allclose(site_operator_sum(S2, 3), magnon_number(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.data())
def test_embed_disjoint_sites_commute(N, data):
    j = data.draw(st.integers(1, N))
    k = data.draw(st.integers(1, N).filter(lambda k: k != j))
    seed = data.draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    a, b = embed_local(A, j, N), embed_local(B, k, N)
    assert max_norm(a @ b - b @ a) < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.permutations([1, 2, 3, 4]))
def test_permutations_conjugate_site_operators(perm):
    # P_ij A^(i) P_ij = A^(j)
    N = 4
    i, j = perm[0], perm[1]
    A = np.array([[0.3, 1.2], [-0.7, 2.0]])
    P = permutation(i, j, N)
    assert max_norm(P @ embed_local(A, i, N) @ P - embed_local(A, j, N)) < 1e-14
