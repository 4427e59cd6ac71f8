import math
from fractions import Fraction

import numpy as np
import pytest

from mmlab import fixtures as F, predict as P
from mmlab.bilinear import strassen, naive_algorithm, basis_transform
from mmlab.counters import Machine
from mmlab.decomposition import derive_cost_parameters
from mmlab.linalg import op_count, matrix

from helpers import m_values

NAMES = ["F1", "F2", "F3", "dense", "strassen-triv"]


@pytest.fixture(scope="module", params=NAMES)
def cp(request):
    return derive_cost_parameters(F.DECOMPOSITIONS[request.param]())


def test_closed_forms_equal_recurrences(cp):
    for h in range(5):
        for x in range(4):
            assert P.T_hx(cp, h, x) == P.T_hx_rec(cp, h, x)
            assert P.B_hx(cp, h, x) == P.B_hx_rec(cp, h, x)
            for M in m_values(cp):
                assert P.C_hx(cp, h, x, M) == P.C_hx_rec(cp, h, x, M)
    for x in range(5):
        assert P.T_x(cp, x) == P.T_x_rec(cp, x)


def test_cc_below_bc_when_memory_is_small(cp):
    # the cc switch only replaces bc subcalls by dc ones
    M = m_values(cp)[0]
    assert P.C_hx(cp, 0, 2, M) == P.B_hx(cp, 0, 2)


def test_switch_level(cp):
    M = math.ceil(P.Z(cp, 1, 0))
    assert P.switch_level(cp, M) == 1
    assert P.switch_level(cp, M - 1) in (0, 1)
    assert P.switch_level(cp, P.Z(cp, 0, 0) / 2) == -1


def test_leading_limit():
    cp = derive_cost_parameters(F.fixture_f1())
    lead = P.leading_coefficient_bc(cp)
    r = [float(P.leading_limit_ratio(cp, h)) for h in (4, 8, 16)]
    assert abs(r[-1] - float(lead)) < abs(r[0] - float(lead))


def test_pole_reported():
    cp = derive_cost_parameters(F.fixture_f1())
    bad = type(cp)(**{**cp.__dict__, "p1": min(cp.l3)})
    with pytest.raises(P.FormulaPole):
        P.leading_coefficient_bc(bad)


def test_recursive_leading_coefficients():
    assert P.recursive_leading_coefficient(strassen()) == 7
    assert P.recursive_leading_coefficient(naive_algorithm(2, 2, 2)) == 2
    with pytest.raises(P.FormulaPole):
        P.recursive_leading_coefficient(naive_algorithm(1, 1, 1))


def test_recursive_counts_strassen():
    for k in range(7):
        assert P.recursive_counts(strassen(), 2 ** k, 2 ** k, 2 ** k) == (6 * (7 ** k - 4 ** k), 7 ** k)


@pytest.mark.parametrize("n0", [2, 3])
def test_basis_cost_exact(n0):
    rng = np.random.default_rng(n0)
    eta = matrix(rng.integers(-1, 2, (n0 * n0, n0 * n0)).tolist())
    q = sum(op_count(eta))
    for e in range(1, 4 if n0 == 2 else 3):
        n = n0 ** e
        A = matrix(rng.integers(-5, 6, (n, n)).tolist())
        m = Machine()
        basis_transform(eta, A, (n0, n0), m)
        arith, _ = P.basis_cost(q, n, n0)
        assert m.adds + m.smults == arith == Fraction(q, n0 * n0) * n * n * e


def test_io_bounds_positive_where_they_apply(cp):
    for M in m_values(cp):
        for h in range(4):
            for x in range(3):
                if P.Z(cp, h, x) > M:
                    assert P.R_hx(cp, h, x, M) > 0
                assert P.Mprime_hx(cp, h, x, M) > 0


def test_r_bound_nonnegative_beyond_memory(cp):
    for M in m_values(cp):
        for h in range(7):
            for x in range(5):
                if P.Z(cp, h, x) > M:
                    assert P.R_hx(cp, h, x, M) >= 0


@pytest.mark.parametrize("name", ["F1", "F2"])
def test_io_leading_cc_limit(name):
    # at M = Z(hs, 0) the integer switch level equals the real one
    cp = derive_cost_parameters(F.DECOMPOSITIONS[name]())
    coef, en, eM = P.io_leading_cc(cp, 2)
    M = float(P.Z(cp, 3, 0))
    ratios = [P.Mprime_hx(cp, h, 0, M) / (coef * (2 ** h) ** en * M ** eM) for h in (10, 20, 40)]
    assert abs(ratios[2] - 1) < abs(ratios[1] - 1) < abs(ratios[0] - 1)
    assert abs(ratios[2] - 1) < 0.03


def test_summary_keys():
    cp = derive_cost_parameters(F.fixture_f2())
    s = P.summary(cp, 2, 1, M=m_values(cp)[-1])
    assert "T_hx" in s or any("T" in k for k in s)
