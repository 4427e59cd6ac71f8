"""Randomised checks of the block-map identities the engines rely on.

Each check_* function draws one random instance (small rationals, exact
arithmetic) and returns True when both sides agree.  run_identity_checks
repeats them and tallies the results.
"""
import random
from fractions import Fraction

import numpy as np

from .linalg import (LinearMap, InterceptionMap, BlockVector, matrix, oplus,
                     phi_sum, circ_compose, star_apply, power_map)


def _q(rng):
    return Fraction(rng.randint(-5, 5), rng.randint(1, 4))


def _mat(rng, r, c):
    return matrix([[_q(rng) for _ in range(c)] for _ in range(r)])


def _vec(rng, n, shape=(1, 1)):
    return BlockVector([_mat(rng, *shape) for _ in range(n)])


def _ell(rng, size, k=None):
    k = rng.randint(1, size) if k is None else k
    return InterceptionMap(sorted(rng.sample(range(1, size + 1), k)), size)


def check_sum_oplus(rng):
    """Sigma^phi commutes with concatenation and with linear combinations."""
    k = rng.randint(1, 3)
    arities = [rng.randint(1, 3) for _ in range(k)]
    phi = LinearMap(_mat(rng, rng.randint(1, 3), sum(arities)))
    t = rng.randint(1, 3)
    shape = (rng.randint(1, 2), rng.randint(1, 2))
    rj = [rng.randint(1, 2) for _ in range(t)]
    a = [[_vec(rng, rj[j] * p, shape) for j in range(t)] for p in arities]
    lhs = phi_sum(phi, [oplus(*a[i]) for i in range(k)], arities)
    rhs = oplus(*[phi_sum(phi, [a[i][j] for i in range(k)], arities) for j in range(t)])
    if lhs != rhs:
        return False
    r = rng.randint(1, 2)
    lam = [_q(rng) for _ in range(t)]
    b = [[_vec(rng, r * p, shape) for _ in range(t)] for p in arities]

    def combo(vs):
        out = vs[0].scale(lam[0])
        for l, v in zip(lam[1:], vs[1:]):
            out = out + v.scale(l)
        return out

    lhs = phi_sum(phi, [combo(b[i]) for i in range(k)], arities)
    rhs = combo([phi_sum(phi, [b[i][j] for i in range(k)], arities) for j in range(t)])
    return lhs == rhs


def check_circ_split(rng):
    """phi_1 l_1 o ... o phi_t l_t = (phi_1 o ... o phi_t)(l_1 o ... o l_t)."""
    t = rng.randint(1, 3)
    p = rng.randint(1, 3)
    ells = [_ell(rng, p) for _ in range(t)]
    phis = [LinearMap(_mat(rng, rng.randint(1, 3), len(e))) for e in ells]
    a = _vec(rng, p ** t)
    lhs = circ_compose(list(zip(phis, ells)), a)
    cut = circ_compose([(None, e) for e in ells], a)
    rhs = circ_compose([(f, None) for f in phis], cut)
    return lhs == rhs


def _nested_sum(phi, arities, leaf, k, prefix=()):
    if len(prefix) == k:
        return leaf(prefix)
    ops = [_nested_sum(phi, arities, leaf, k, prefix + (i,)) for i in range(len(arities))]
    return phi_sum(phi, ops, arities)


def check_power_split(rng):
    """psi = phi(phi_1 l_1, ..., phi_t l_t) lifts to psi^k as nested Sigma^phi
    over all k-fold compositions."""
    t = rng.randint(1, 3)
    k = rng.randint(1, 3)
    p = rng.randint(1, 3)
    n, m = rng.randint(1, 2), rng.randint(1, 2)
    ells = [_ell(rng, p) for _ in range(t)]
    phis = [_mat(rng, rng.randint(1, 2), len(e)) for e in ells]
    qs = [f.shape[0] for f in phis]
    Phi = _mat(rng, n * m, sum(qs))
    stacked = np.concatenate([f.dot(e.matrix()) for f, e in zip(phis, ells)], axis=0)
    psi = LinearMap(Phi.dot(stacked), out_shape=(n, m))
    phi = LinearMap(Phi, out_shape=(n, m))
    maps = [LinearMap(f) for f in phis]
    b = _vec(rng, p ** k)
    lhs = power_map(psi, k, b)
    rhs = _nested_sum(phi, qs, lambda pre: circ_compose([(maps[i], ells[i]) for i in pre], b), k)
    return lhs == rhs


def check_star_linear(rng):
    k = rng.randint(1, 3)
    dims = [(rng.randint(1, 2), rng.randint(1, 2)) for _ in range(k)]
    maps = [LinearMap(_mat(rng, rng.randint(1, 3), r * c), in_shape=(r, c)) for r, c in dims]
    R = int(np.prod([d[0] for d in dims])) * rng.randint(1, 2)
    C = int(np.prod([d[1] for d in dims])) * rng.randint(1, 2)
    n = rng.randint(1, 3)
    As = [_mat(rng, R, C) for _ in range(n)]
    lam = [_q(rng) for _ in range(n)]
    S = sum(l * A for l, A in zip(lam, As))
    lhs = star_apply(maps, S)
    parts = [star_apply(maps, A).scale(l) for l, A in zip(lam, As)]
    rhs = parts[0]
    for x in parts[1:]:
        rhs = rhs + x
    return lhs == rhs


def check_star_intercept(rng):
    """l_1 o ... o l_k applied after phi_k * ... * phi_1 equals the star
    product of the intercepted maps."""
    k = rng.randint(1, 3)
    dims = [(rng.randint(1, 2), rng.randint(1, 2)) for _ in range(k)]
    us = [rng.randint(1, 3) for _ in range(k)]
    phis = [_mat(rng, u, r * c) for u, (r, c) in zip(us, dims)]
    ells = [_ell(rng, u) for u in us]
    r1, r2 = rng.randint(1, 2), rng.randint(1, 2)
    A = _mat(rng, r1 * int(np.prod([d[0] for d in dims])), r2 * int(np.prod([d[1] for d in dims])))
    plain = [LinearMap(f, in_shape=d) for f, d in zip(phis, dims)]
    cut = [LinearMap(e.matrix().dot(f), in_shape=d) for f, e, d in zip(phis, ells, dims)]
    lhs = circ_compose([(None, e) for e in ells], star_apply(plain[::-1], A))
    rhs = star_apply(cut[::-1], A)
    return lhs == rhs


def check_star_factor(rng):
    """phi_i = psi_i chi_i for every i gives star(phi) = star(psi)(star(chi))."""
    k = rng.randint(1, 3)
    dims = [(rng.randint(1, 2), rng.randint(1, 2)) for _ in range(k)]
    ps = [rng.randint(1, 3) for _ in range(k)]
    qs = [rng.randint(1, 3) for _ in range(k)]
    chis = [_mat(rng, p, r * c) for p, (r, c) in zip(ps, dims)]
    psis = [_mat(rng, q, p) for q, p in zip(qs, ps)]
    r1, r2 = rng.randint(1, 2), rng.randint(1, 2)
    A = _mat(rng, r1 * int(np.prod([d[0] for d in dims])), r2 * int(np.prod([d[1] for d in dims])))
    full = [LinearMap(s.dot(c), in_shape=d) for s, c, d in zip(psis, chis, dims)]
    lhs = star_apply(full, A)
    inner = star_apply([LinearMap(c, in_shape=d) for c, d in zip(chis, dims)], A)
    rhs = star_apply([LinearMap(s) for s in psis], inner)
    return lhs == rhs


CHECKS = {
    "sum-oplus": check_sum_oplus,
    "circ-split": check_circ_split,
    "power-split": check_power_split,
    "star-intercept": check_star_intercept,
    "star-factor": check_star_factor,
    "star-linear": check_star_linear,
}


def run_identity_checks(trials=100, seed=0, names=None):
    """Returns {name: (passed, trials)}."""
    out = {}
    for name in names or CHECKS:
        rng = random.Random("%s-%s" % (seed, name))
        ok = sum(1 for _ in range(trials) if CHECKS[name](rng))
        out[name] = (ok, trials)
    return out
