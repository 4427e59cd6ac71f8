"""Shared test helpers: seeded random operands and an engine-independent
oracle for (h, x)-instances."""
import math

import numpy as np

from mmlab import predict as P
from mmlab.bilinear import basis_transform
from mmlab.linalg import BlockVector, matrix, inverse, kron, naive_multiply


def rand_int(rng, r, c, lo=-9, hi=9):
    return matrix(rng.integers(lo, hi + 1, (r, c)).tolist())


def rand_instance(rng, d, h, x, exact=True):
    n0, m0, k0 = d.dims
    if exact:
        mk = lambda r, c: rand_int(rng, r, c, -5, 5)
    else:
        mk = lambda r, c: rng.integers(-3, 4, (r, c)).astype(float)
    S = BlockVector([mk(n0 ** h, m0 ** h) for _ in range(d.p11 ** x)])
    T = BlockVector([mk(m0 ** h, k0 ** h) for _ in range(d.p11b ** x)])
    return S, T


def _mix(Q, blocks):
    out = []
    for row in Q:
        acc = None
        for c, b in zip(row, blocks):
            if c != 0:
                acc = c * b if acc is None else acc + c * b
        out.append(acc if acc is not None else 0 * blocks[0])
    return out


def transformed_product(d, A, B):
    """Product in the transformed coordinates the engines work in, computed
    by leaving them, multiplying naively and coming back."""
    n0, m0, k0 = d.dims
    if A.size == 1 and B.size == 1 or d.basis.is_identity:
        return naive_multiply(A, B)
    a = basis_transform(d.basis.inv[0], A, (n0, m0))
    b = basis_transform(d.basis.inv[1], B, (m0, k0))
    return basis_transform(inverse(d.basis.output_map()), naive_multiply(a, b), (n0, k0))


def instance_oracle(d, S, T, x):
    """varphi1^(x) applied to blockwise products of psi12^(x) S and phi12^(x) T."""
    s = _mix(kron(*[d.psi12] * x), list(S.blocks))
    t = _mix(kron(*[d.phi12] * x), list(T.blocks))
    prods = [transformed_product(d, a, b) for a, b in zip(s, t)]
    return _mix(kron(*[d.varphi1] * x), prods)


def m_values(cp):
    """Three fast-memory sizes spanning the cc switch levels."""
    return sorted({math.ceil(P.Z(cp, 0, 0)), math.ceil(P.Z(cp, 1, 0)), math.ceil(P.Z(cp, 2, 0))})


def single_entry_mutations(alg, count, seed=0):
    """`count` copies of alg, each with one entry of U, V or W bumped by one."""
    import random
    from mmlab.bilinear import BilinearAlgorithm
    rng = random.Random(seed)
    seen = set()
    out = []
    while len(out) < count:
        role = rng.choice("UVW")
        M = getattr(alg, role)
        r, c = rng.randrange(M.shape[0]), rng.randrange(M.shape[1])
        if (role, r, c) in seen:
            continue
        seen.add((role, r, c))
        mats = {k: getattr(alg, k).copy() for k in "UVW"}
        mats[role][r, c] += 1
        out.append(((role, r, c), BilinearAlgorithm(alg.n0, alg.m0, alg.k0,
                                                     mats["U"], mats["V"], mats["W"])))
    return out
