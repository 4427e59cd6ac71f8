import numpy as np
import pytest

from mmlab import fixtures as F, engines as E, predict as P
from mmlab.counters import Machine
from mmlab.decomposition import derive_cost_parameters
from mmlab.linalg import BlockVector, mat_equal, naive_multiply, ShapeError

from helpers import rand_int, rand_instance, instance_oracle, m_values

FIXTURES = ["F1", "F2", "F3", "dense"]


@pytest.fixture(scope="module", params=FIXTURES)
def fx(request):
    d = F.DECOMPOSITIONS[request.param]()
    return d, derive_cost_parameters(d)


def _same(out, ref):
    return len(out) == len(ref) and all(mat_equal(a, b) for a, b in zip(out.blocks, ref))


def test_ac_exact_and_counted(fx):
    d, cp = fx
    rng = np.random.default_rng(0)
    for x in range(3):
        S, T = rand_instance(rng, d, 0, x)
        mach = Machine()
        out = E.ac(d, S, T, mach)
        assert _same(out, instance_oracle(d, S, T, x))
        assert mach.report().arithmetic == P.T_x(cp, x)
        assert mach.peak - mach.base_words <= P.ac_memory_bound(cp, x)


@pytest.mark.parametrize("h,x", [(1, 0), (1, 1), (2, 0), (2, 1)])
def test_bc_dc_cc_agree_with_oracle(fx, h, x):
    d, cp = fx
    rng = np.random.default_rng(h * 10 + x)
    S, T = rand_instance(rng, d, h, x)
    ref = instance_oracle(d, S, T, x)
    m = Machine()
    assert _same(E.bc(d, S, T, m), ref)
    assert m.report().arithmetic == P.T_hx(cp, h, x)
    assert m.peak <= P.Z(cp, h, x)
    m = Machine()
    assert _same(E.dc(d, S, T, m), ref)
    assert m.report().arithmetic == P.B_hx(cp, h, x)
    for M in m_values(cp):
        m = Machine()
        assert _same(E.cc(d, S, T, M, m), ref)
        assert m.report().arithmetic == P.C_hx(cp, h, x, M)


def test_star_engines_full_product(fx):
    d, cp = fx
    n0, m0, k0 = d.dims
    rng = np.random.default_rng(7)
    for h in (1, 2):
        A, B = rand_int(rng, n0 ** h, m0 ** h), rand_int(rng, m0 ** h, k0 ** h)
        ref = naive_multiply(A, B)
        parts = {}
        m = Machine()
        assert mat_equal(E.bc_star(d, A, B, m, parts), ref)
        assert m.report().arithmetic == P.T_hx(cp, h, 0) + P.star_basis_ops(d, n0 ** h, m0 ** h, k0 ** h)
        assert parts["engine"] == P.T_hx(cp, h, 0)
        M = m_values(cp)[-1]
        assert mat_equal(E.cc_star(d, A, B, M), ref)
        assert mat_equal(E.ab(d, A, B), ref)


def test_float_mode_counts_match_exact():
    d = F.fixture_f2()
    rng = np.random.default_rng(1)
    S, T = rand_instance(rng, d, 2, 1, exact=False)
    m = Machine("float")
    E.bc(d, S, T, m)
    assert m.report().arithmetic == P.T_hx(derive_cost_parameters(d), 2, 1)


def test_cc_rejects_tiny_memory():
    d = F.fixture_f1()
    cp = derive_cost_parameters(d)
    S, T = rand_instance(np.random.default_rng(0), d, 1, 0)
    with pytest.raises(ValueError, match="below the minimum"):
        E.cc(d, S, T, int(P.Z(cp, 0, 0)) - 1)


def test_instance_shape_errors():
    d = F.fixture_f1()
    with pytest.raises(ShapeError):
        E.instance_shape(d, BlockVector.scalars([1, 2, 3]), BlockVector.scalars([1, 2, 3]))
    with pytest.raises(ShapeError):
        E.bc(d, BlockVector([np.ones((2, 2))]), BlockVector([np.ones((4, 4))]))


def test_combined_strassen_bc():
    d = F.combined_strassen()
    cp = derive_cost_parameters(d)
    rng = np.random.default_rng(2)
    A, B = rand_int(rng, 8, 8), rand_int(rng, 8, 8)
    m = Machine()
    C = E.run_engine(d, A, B, "bc", machine=m)
    assert mat_equal(C, naive_multiply(A, B))
    assert m.report().arithmetic == P.T_hx(cp, 1, 0)


def test_run_engine_unknown():
    with pytest.raises(ValueError):
        E.run_engine(F.fixture_f1(), np.ones((2, 2)), np.ones((2, 2)), "zz")
