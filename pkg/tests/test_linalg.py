import random
from fractions import Fraction

import numpy as np
import pytest

from mmlab.linalg import (scalar, matrix, zeros, identity, inverse, mat_equal, naive_multiply,
                          op_count, split_blocks, assemble, LinearMap, InterceptionMap,
                          BlockVector, oplus, apply_map, phi_sum, power_map, ShapeError)
from mmlab.identities import CHECKS, run_identity_checks


def test_scalar_parsing():
    assert scalar("3/6") == Fraction(1, 2)
    assert scalar("4/2") == 2 and isinstance(scalar("4/2"), int)
    assert scalar(np.int64(5)) == 5
    assert scalar(2.0) == 2
    with pytest.raises(TypeError):
        scalar(0.5)
    with pytest.raises(ZeroDivisionError):
        scalar("1/0")


def test_naive_multiply_matches_numpy_on_ints():
    rng = np.random.default_rng(1)
    A = rng.integers(-9, 10, (5, 3))
    B = rng.integers(-9, 10, (3, 4))
    C = naive_multiply(matrix(A.tolist()), matrix(B.tolist()))
    assert mat_equal(C, A @ B)
    with pytest.raises(ShapeError):
        naive_multiply(matrix(A.tolist()), matrix(A.tolist()))


def test_inverse_exact():
    Q = matrix([[2, 1, 0], [1, 3, 1], [0, 1, 4]])
    Qi = inverse(Q)
    assert mat_equal(naive_multiply(Q, Qi), identity(3))
    assert any(isinstance(v, Fraction) for v in Qi.flat)
    with pytest.raises(ZeroDivisionError):
        inverse(matrix([[1, 2], [2, 4]]))


def test_op_count_convention():
    # row 1: 3 nonzeros -> 2 adds, one entry outside +-1 -> 1 mult
    Q = matrix([[1, -1, 2], [0, 1, 0], [0, 0, 0], ["1/2", 0, 0]])
    assert op_count(Q) == (2, 2)


def test_split_assemble_roundtrip():
    A = matrix(np.arange(24).reshape(4, 6).tolist())
    blocks = split_blocks(A, 2, 3)
    assert len(blocks) == 6 and blocks[1].shape == (2, 2)
    assert mat_equal(blocks[1], A[0:2, 2:4])
    assert mat_equal(assemble(blocks, 2, 3), A)


def test_interception_map():
    ell = InterceptionMap([1, 3], 4)
    assert ell.positions == [0, 2]
    assert mat_equal(ell.matrix(), matrix([[1, 0, 0, 0], [0, 0, 1, 0]]))
    with pytest.raises(ValueError):
        InterceptionMap([2, 2], 4)
    with pytest.raises(IndexError):
        InterceptionMap([0, 2], 4)


def test_block_vector_basics():
    v = BlockVector.scalars([1, 2, 3])
    w = BlockVector.scalars([4, 5, 6])
    assert (v + w).values() == [5, 7, 9]
    assert oplus(v, w).values() == [1, 2, 3, 4, 5, 6]
    with pytest.raises(ShapeError):
        BlockVector([])
    with pytest.raises(ShapeError):
        BlockVector([zeros((1, 1)), zeros((2, 2))])


def test_apply_map_and_power():
    phi = LinearMap(matrix([[1, 1], [1, -1]]))
    v = BlockVector.scalars([3, 5])
    assert apply_map(phi, v).values() == [8, -2]
    # phi^2 on scalars is the Kronecker square
    u = BlockVector.scalars([1, 2, 3, 4])
    K = np.kron(np.array([[1, 1], [1, -1]]), np.array([[1, 1], [1, -1]]))
    assert power_map(phi, 2, u).values() == list(K @ np.array([1, 2, 3, 4]))


def test_phi_sum_mixed_arity():
    # two operands of arity 1 and 2 combined by one 1x3 map
    phi = LinearMap(matrix([[1, 2, 3]]))
    a = BlockVector.scalars([1, 10])          # arity 1, two chunks
    b = BlockVector.scalars([2, 3, 20, 30])   # arity 2, two chunks
    out = phi_sum(phi, [a, b], [1, 2])
    assert out.values() == [1 + 4 + 9, 10 + 40 + 90]


@pytest.mark.parametrize("name", sorted(CHECKS))
def test_identity_checks(name):
    res = run_identity_checks(trials=25, seed=3, names=[name])
    assert res[name] == (25, 25)


def test_identity_check_detects_corruption(monkeypatch):
    import mmlab.identities as I
    real = I.star_apply

    def bad(maps, A):
        out = real(maps, A)
        return BlockVector([out.blocks[0] + 1] + list(out.blocks[1:]))

    monkeypatch.setattr(I, "star_apply", bad)
    rng = random.Random(0)
    results = [I.check_star_factor(rng) for _ in range(10)]
    assert not all(results)
