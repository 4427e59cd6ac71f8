"""Builtin algorithms and constructed decompositions.

Real decompositions of interesting algorithms come from external data, so
the test fixtures are built the other way round: pick the factor maps first,
let them define the intercepted products, then fill up with rank-1 terms
until the whole thing satisfies the Brent equations.
"""
import os
import random
import logging
from fractions import Fraction

import numpy as np

from .linalg import matrix, zeros, identity, naive_multiply, inverse, mat_equal
from .bilinear import (BilinearAlgorithm, BasisTriple, strassen, naive_algorithm, rotate,
                       validate_algorithm)
from .decomposition import (AlgebraDecomposition, validate_decomposition, combine_decompositions,
                            DecompositionError, load_decomposition)

log = logging.getLogger(__name__)


def mm_tensor(n0, m0, k0):
    T = zeros((n0 * m0, m0 * k0, n0 * k0))
    for i in range(n0):
        for j in range(m0):
            for k in range(k0):
                T[i * m0 + j, j * k0 + k, i * k0 + k] = 1
    return T


def _contract(T, P, Q, R):
    """T'[a', b', c'] = sum T[a, b, c] P[a, a'] Q[b, b'] R[c, c']."""
    T = np.tensordot(T, P, axes=([0], [0]))        # b c a'
    T = np.tensordot(T, Q, axes=([0], [0]))        # c a' b'
    T = np.tensordot(T, R, axes=([0], [0]))        # a' b' c'
    return T


def _unit(n, i):
    v = [0] * n
    v[i] = 1
    return v


def _rank_one_fill(res, min_count):
    """Split residual tensor into rank-1 terms along the grouping that needs
    the fewest, then split terms until there are at least min_count."""
    a1, a2, a3 = res.shape
    nz = lambda v: any(x != 0 for x in v)
    options = []
    ab = [(_unit(a1, a), _unit(a2, b), list(res[a, b, :])) for a in range(a1) for b in range(a2)
          if nz(res[a, b, :])]
    ac = [(_unit(a1, a), list(res[a, :, c]), _unit(a3, c)) for a in range(a1) for c in range(a3)
          if nz(res[a, :, c])]
    bc = [(list(res[:, b, c]), _unit(a2, b), _unit(a3, c)) for b in range(a2) for c in range(a3)
          if nz(res[:, b, c])]
    options = sorted([ab, ac, bc], key=len)
    terms = list(options[0])
    k = 0
    while len(terms) < min_count:
        u, v, w = terms[k]
        # (u, v, w) = (u, v, 2w) + (u, v, -w)
        terms[k] = (u, v, [2 * x for x in w])
        terms.insert(k + 1, (u, v, [-x for x in w]))
        k = (k + 2) % len(terms)
    return terms


def construct(dims, psi11, psi12, phi11, phi12, varphi1, g, basis=None, ell1=None, name=None,
              min_trailing=None):
    """Build a valid decomposition whose first component is given.

    g: (n0 k0) x q1, the varphi0 columns of component 1.  ell1 (1-based
    positions of the intercepted products among all t) defaults to the first
    p1 slots; if it names positions beyond t the extras are dropped.
    """
    n0, m0, k0 = dims
    psi11, psi12, phi11, phi12, varphi1, g = [matrix(np.asarray(M, dtype=object).tolist())
                                              for M in (psi11, psi12, phi11, phi12, varphi1, g)]
    p1 = psi12.shape[0]
    a1, a2, a3 = n0 * m0, m0 * k0, n0 * k0
    if basis is None:
        basis = BasisTriple(identity(a1), identity(a2), identity(a3))
    U1 = naive_multiply(psi12, psi11)
    V1 = naive_multiply(phi12, phi11)
    W1 = np.ascontiguousarray(naive_multiply(g, varphi1).T)
    # the target tensor in transformed coordinates
    target = _contract(mm_tensor(n0, m0, k0), basis.inv[0], basis.inv[1], basis.inv[2])
    res = target.copy()
    for r in range(p1):
        res = res - np.einsum("a,b,c->abc", U1[r], V1[r], W1[r])
    need = (min_trailing if min_trailing is not None else max(a1, a2, a3) + 1)
    terms = _rank_one_fill(res, need)
    t = p1 + len(terms)
    if ell1 is None:
        ell1 = list(range(1, p1 + 1))
    ell1 = sorted(ell1)
    if len(ell1) != p1 or ell1[-1] > t:
        raise ValueError("ell1 %s does not fit t = %d" % (ell1, t))
    trailing = [i for i in range(1, t + 1) if i not in set(ell1)]
    Up, Vp, Wp = zeros((t, a1)), zeros((t, a2)), zeros((t, a3))
    for r, i in enumerate(ell1):
        Up[i - 1], Vp[i - 1], Wp[i - 1] = U1[r], V1[r], W1[r]
    for (u, v, w), i in zip(terms, trailing):
        Up[i - 1], Vp[i - 1], Wp[i - 1] = u, v, w
    U = naive_multiply(Up, basis.eta[0])
    V = naive_multiply(Vp, basis.eta[1])
    W = naive_multiply(Wp, basis.eta[2])
    alg = BilinearAlgorithm(n0, m0, k0, U, V, W, name=name or "synthetic")
    varphi0 = np.concatenate([g] + [Wp[i - 1].reshape(-1, 1) for i in trailing], axis=1)
    d = AlgebraDecomposition(alg, ell1, trailing, psi11, psi12, phi11, phi12, varphi1, varphi0,
                             basis=None if basis.is_identity else basis, name=name)
    rep = validate_decomposition(d)
    if not rep.ok:
        raise DecompositionError("construction failed: %s" % rep.message)
    return d


def _select(n, idx):
    return [_unit(n, i) for i in idx]


def fixture_f1():
    """<2,2,2> with ell_{.,1} = (2,2,3), ell_{.,3} = (2,2,2), p1 = 4."""
    P = [[1, 0], [0, 1], [1, 1], [1, -1]]
    varphi1 = [[1, 1, 1, 0], [0, 1, 0, 1]]
    psi11 = _select(4, [0, 1])      # a11, a12
    phi11 = _select(4, [0, 2])      # b11, b21
    g = np.array(_select(4, [0, 1]), dtype=object).T      # c11, c12
    return construct((2, 2, 2), psi11, P, phi11, P, varphi1, g, name="F1")


def _random_invertible(n, rng):
    while True:
        L = identity(n)
        R = identity(n)
        for i in range(n):
            for j in range(n):
                if i > j:
                    L[i, j] = rng.choice([-1, 0, 0, 1])
                elif i < j:
                    R[i, j] = rng.choice([-1, 0, 0, 1])
        Q = naive_multiply(L, R)
        perm = list(range(n))
        rng.shuffle(perm)
        Q = Q[perm]
        try:
            inverse(Q)
            return Q
        except ZeroDivisionError:
            continue


def _random_rows(rows, cols, rng, vals=(-1, 0, 1, 1, 2)):
    while True:
        M = [[rng.choice(vals) for _ in range(cols)] for _ in range(rows)]
        if all(any(x != 0 for x in r) for r in M):
            return M


def fixture_f2(seed=7):
    """Seeded random <2,2,2> fixture with a non-identity basis."""
    rng = random.Random(seed)
    n0 = m0 = k0 = 2
    basis = BasisTriple(_random_invertible(4, rng), _random_invertible(4, rng),
                        _random_invertible(4, rng))
    p1, p11, p11b, q1 = 5, 3, 2, 3
    psi11 = _random_rows(p11, 4, rng)
    phi11 = _random_rows(p11b, 4, rng)
    psi12 = _random_rows(p1, p11, rng, vals=(-1, 0, 1))
    phi12 = _random_rows(p1, p11b, rng, vals=(-1, 0, 1))
    varphi1 = _random_rows(q1, p1, rng, vals=(-1, 0, 0, 1))
    g = _random_rows(4, q1, rng, vals=(-1, 0, 0, 1))
    ell1 = sorted(rng.sample(range(1, 9), p1))
    return construct((n0, m0, k0), psi11, psi12, phi11, phi12, varphi1, g, basis=basis,
                     ell1=ell1, name="F2")


def fixture_f3():
    """Rectangular <2,2,3> fixture."""
    psi11 = [[1, 0, 0, 0], [0, 1, 0, 1]]
    phi11 = [[1, 0, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0], [0, 1, 0, 0, 1, 0]]
    psi12 = [[1, 0], [0, 1], [1, 1], [1, -1]]
    phi12 = [[1, 0, 0], [0, 1, 0], [1, 0, 1], [0, 1, -1]]
    varphi1 = [[1, 0, 1, 0], [0, 1, 0, -1]]
    g = np.array([[1, 0], [0, 1], [0, 0], [1, 0], [0, 0], [0, 1]], dtype=object)
    return construct((2, 2, 3), psi11, psi12, phi11, phi12, varphi1, g, name="F3")


def fixture_dense(seed=3):
    """<2,2,2> with a large first component; its bc counts approach the
    leading term quickly (used for the limit check)."""
    P = [[1, 0], [0, 1], [1, 1], [1, -1], [1, 2], [2, 1]]
    phi = [[1, 0], [0, 1], [1, -1], [1, 1], [2, 1], [1, 2]]
    varphi1 = [[1, 0, 1, 0, 0, 0], [0, 1, 0, 1, 0, 0]]
    psi11 = _select(4, [0, 1])
    phi11 = _select(4, [0, 2])
    g = np.array(_select(4, [0, 1]), dtype=object).T
    return construct((2, 2, 2), psi11, P, phi11, phi, varphi1, g, name="dense")


def trivial_decomposition(alg, ell1=(3, 4), name=None):
    """Intercept a few products without factoring anything: psi11 = the
    products' own rows, psi12 = varphi1 = identity."""
    ell1 = sorted(ell1)
    p = len(ell1)
    rows = [i - 1 for i in ell1]
    t = alg.t
    trailing = [i for i in range(1, t + 1) if i not in set(ell1)]
    g = np.ascontiguousarray(alg.W[rows].T)
    varphi0 = np.concatenate([g] + [alg.W[i - 1].reshape(-1, 1) for i in trailing], axis=1)
    return AlgebraDecomposition(alg, ell1, trailing, alg.U[rows], identity(p), alg.V[rows],
                                identity(p), identity(p), varphi0, name=name or alg.name + "-triv")


def strassen_trivial():
    return trivial_decomposition(strassen(), name="strassen-triv")


def combined_strassen():
    s = strassen()
    r1 = rotate(s)
    r2 = rotate(r1)
    return combine_decompositions([trivial_decomposition(a) for a in (s, r1, r2)])


def tiny():
    """<1,1,1;4> decomposition used for the closure check of the combination."""
    alg = BilinearAlgorithm(1, 1, 1, [[1], [1], [1], [1]], [[1], [1], [1], [1]],
                            [[1], [1], [-2], [1]], name="tiny")
    return AlgebraDecomposition(alg, [1, 2], [3, 4], [[1], [1]], identity(2), [[1], [1]],
                                identity(2), identity(2), [[1, 1, -2, 1]], name="tiny")


ALGORITHMS = {
    "strassen": strassen,
    "naive222": lambda: naive_algorithm(2, 2, 2),
    "naive223": lambda: naive_algorithm(2, 2, 3),
    "naive333": lambda: naive_algorithm(3, 3, 3),
}

DECOMPOSITIONS = {
    "F1": fixture_f1,
    "F2": fixture_f2,
    "F3": fixture_f3,
    "dense": fixture_dense,
    "strassen-triv": strassen_trivial,
    "combined": combined_strassen,
}

SYNTHETIC = ("F1", "F2", "F3")


def fixture_dir():
    env = os.environ.get("MMLAB_FIXTURES")
    if env:
        return env
    here = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(here, "data")


def resolve(spec):
    """'builtin:NAME', a path, or a file name in the fixture directory.
    Returns ("algorithm", alg) or ("decomposition", d)."""
    if spec.startswith("builtin:"):
        key = spec[len("builtin:"):]
        if key in ALGORITHMS:
            return "algorithm", ALGORITHMS[key]()
        if key in DECOMPOSITIONS:
            return "decomposition", DECOMPOSITIONS[key]()
        raise KeyError("no builtin named %r (have %s)" % (key, ", ".join(sorted(ALGORITHMS) + sorted(DECOMPOSITIONS))))
    path = spec
    if not os.path.exists(path):
        alt = os.path.join(fixture_dir(), spec)
        if os.path.exists(alt):
            path = alt
        elif os.path.exists(alt + ".algdec"):
            path = alt + ".algdec"
        else:
            raise FileNotFoundError(spec)
    return "decomposition", load_decomposition(path)


def available_files():
    d = fixture_dir()
    if not os.path.isdir(d):
        return []
    return sorted(os.path.join(d, f) for f in os.listdir(d) if f.endswith(".algdec"))
