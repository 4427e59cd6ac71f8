"""Decomposition engines.

Instances are stacks of equally shaped blocks held in a Blk of shape
(L, rows, cols).  An (h, x) instance has L = p11**x (A side), p11'**x (B side)
and q1**x (C side) blocks of side n0**h etc.

    ac  -- x-instances with scalar blocks
    bc  -- expansion over the top block level, recursing on (h-1, x+1) for
           component 1 and (h-1, x) for every other component
    dc  -- like ac but on matrix blocks, delegating to bc at x = 0
    cc  -- bc until an (h, 0) instance fits in M words, then dc

Component-1 vectors keep the old index outermost: a1 has index j*p11 + r.
ac and dc consume the most significant digit first.
"""
import logging
from functools import reduce

import numpy as np

from .linalg import ShapeError, BlockVector, matrix, zeros
from .counters import Machine, Blk
from .bilinear import basis_transform, ab_multiply, recursive_multiply, check_pure_power

log = logging.getLogger(__name__)


def _encode(mach, row, srcs, cat):
    """Linear combination of views; a lone coefficient 1 returns the view."""
    nz = [(c, v) for c, v in enumerate(row) if v != 0]
    if len(nz) == 1 and nz[0][1] == 1:
        return srcs[nz[0][0]], False
    out = mach.new(srcs[0].shape, cat)
    mach.lincomb(out, [v for _, v in nz], [srcs[c] for c, _ in nz])
    return out, True


def _sink(mach, col, targets, written, shape):
    """Where a product's result goes.  A column with a single 1 aimed at an
    untouched target lets the recursion write straight into it; otherwise a
    temporary is allocated and decoded by _drain."""
    nz = [g for g, w in enumerate(col) if w != 0]
    if len(nz) == 1 and col[nz[0]] == 1 and not written[nz[0]]:
        written[nz[0]] = True
        return targets[nz[0]], False
    return mach.new(shape, "C"), True


def _drain(mach, col, targets, written, z, owned):
    if not owned:
        return
    for g, w in enumerate(col):
        if w != 0:
            mach.accum(targets[g], w, z, not written[g])
            written[g] = True
    mach.free(z)


def _grid_map(mach, Q, X, gm, gn, cat, owned):
    """Apply Q to the gm x gn grid of X's matrix dims; outputs become a new
    innermost vector axis."""
    cells = X.grid(gm, gn)
    out = mach.new(X.shape[:-2] + (Q.shape[0],) + cells[0].shape[-2:], cat)
    for o in range(Q.shape[0]):
        mach.lincomb(out[..., o, :, :], Q[o], cells)
    if owned:
        mach.free(X)
    return out, True


class Context:
    """Decomposition data plus the machine an engine run executes on."""

    def __init__(self, d, mach, cp=None, M=None):
        self.d = d
        self.mach = mach
        self.cp = cp
        self.M = M
        self.stages = d.stages
        self.p1 = d.p1
        self.q1 = d.q1
        self.p11 = d.p11
        self.p11b = d.p11b
        self.psi12 = d.psi12
        self.phi12 = d.phi12
        self.varphi1 = d.varphi1


def _ac(ctx, S, T, R, x, base):
    """Component-1 recursion on the vector digits; `base` handles x = 0."""
    if x == 0:
        base(S, T, R)
        return
    mach = ctx.mach
    Ls = len(S) // ctx.p11
    Lt = len(T) // ctx.p11b
    Lc = len(R) // ctx.q1
    Sch = [S[r * Ls:(r + 1) * Ls] for r in range(ctx.p11)]
    Tch = [T[r * Lt:(r + 1) * Lt] for r in range(ctx.p11b)]
    Rch = [R[k * Lc:(k + 1) * Lc] for k in range(ctx.q1)]
    written = [False] * ctx.q1
    for i in range(ctx.p1):
        s, fs = _encode(mach, ctx.psi12[i], Sch, "A")
        t, ft = _encode(mach, ctx.phi12[i], Tch, "B")
        col = ctx.varphi1[:, i]
        z, fz = _sink(mach, col, Rch, written, (Lc,) + R.shape[1:])
        _ac(ctx, s, t, z, x - 1, base)
        if fs:
            mach.free(s)
        if ft:
            mach.free(t)
        _drain(mach, col, Rch, written, z, fz)


def _hadamard(ctx):
    return lambda S, T, R: ctx.mach.hadamard(R, S, T)


def _flat(X):
    n = int(np.prod(X.shape[:-2]))
    return X.reshape(n, *X.shape[-2:])


def _stage(ctx, j, X, Y, R, xi1, xi2):
    """Expansion over level j of the (possibly Kronecker-combined) base.

    X: (J, r_1..r_j, rows, cols) holds component-1 inputs of earlier levels;
    R: (Jc, k_1..k_j, rows, cols) receives this level's output.
    """
    mach = ctx.mach
    levels = ctx.stages
    D = len(levels)
    if j == D:
        xi1(_flat(X), _flat(Y), _flat(R))
        return
    lv = levels[j]
    n, m, k = lv.dims
    Xc = X.grid(n, m)
    Yc = Y.grid(m, k)
    Rc = R.grid(n, k)
    written = [False] * (n * k)
    Up, Vp = lv.base.U, lv.base.V
    for e, tr in enumerate(lv.trailing):
        a, fa = _encode(mach, Up[tr - 1], Xc, "A")
        b, fb = _encode(mach, Vp[tr - 1], Yc, "B")
        col = lv.varphi0[:, lv.q1 + e]
        c, fc = _sink(mach, col, Rc, written, Rc[0].shape)
        _prefix(ctx, 0, j, a, b, c, xi2)
        if fa:
            mach.free(a)
        if fb:
            mach.free(b)
        _drain(mach, col, Rc, written, c, fc)
    # component 1 of this level
    a, _ = _grid_map(mach, lv.psi11, X, n, m, "A", False)
    b, _ = _grid_map(mach, lv.phi11, Y, m, k, "B", False)
    rn = mach.new(R.shape[:-2] + (lv.q1,) + Rc[0].shape[-2:], "C")
    _stage(ctx, j + 1, a, b, rn, xi1, xi2)
    mach.free(a)
    mach.free(b)
    for g in range(n * k):
        for kk in range(lv.q1):
            w = lv.varphi0[g, kk]
            if w != 0:
                mach.accum(Rc[g], w, rn[..., kk, :, :], not written[g])
                written[g] = True
    mach.free(rn)



def _prefix(ctx, l, j, a, b, c, xi2):
    """Walk the component-1 products of levels l..j-1 one at a time.

    a: (J, r_l..r_{j-1}, rows, cols); c: (Jc, k_l..k_{j-1}, rows, cols).
    """
    mach = ctx.mach
    if l == j:
        _suffix(ctx, j + 1, a, b, c, xi2)
        return
    lv = ctx.stages[l]
    sa = [a.take(1, r) for r in range(a.shape[1])]
    sb = [b.take(1, r) for r in range(b.shape[1])]
    sc = [c.take(1, k) for k in range(c.shape[1])]
    written = [False] * len(sc)
    for i in range(lv.p1):
        s, fs = _encode(mach, lv.psi12[i], sa, "A")
        t, ft = _encode(mach, lv.phi12[i], sb, "B")
        col = lv.varphi1[:, i]
        z, fz = _sink(mach, col, sc, written, sc[0].shape)
        _prefix(ctx, l + 1, j, s, t, z, xi2)
        if fs:
            mach.free(s)
        if ft:
            mach.free(t)
        _drain(mach, col, sc, written, z, fz)


def _suffix(ctx, l, a, b, c, xi2):
    """Run every product of levels l..D-1 on the pieces, depth first."""
    mach = ctx.mach
    if l == len(ctx.stages):
        xi2(a, b, c)
        return
    lv = ctx.stages[l]
    n, m, k = lv.dims
    ga, gb, gc = a.grid(n, m), b.grid(m, k), c.grid(n, k)
    U, V, W = lv.base.U, lv.base.V, lv.base.W
    written = [False] * len(gc)
    for r in range(lv.t):
        s, fs = _encode(mach, U[r], ga, "A")
        t, ft = _encode(mach, V[r], gb, "B")
        z, fz = _sink(mach, W[r], gc, written, gc[0].shape)
        _suffix(ctx, l + 1, s, t, z, xi2)
        if fs:
            mach.free(s)
        if ft:
            mach.free(t)
        _drain(mach, W[r], gc, written, z, fz)

def _expand(ctx, S, T, R, xi1, xi2):
    _stage(ctx, 0, S, T, R, xi1, xi2)


def _bc(ctx, S, T, R, h, x):
    if h == 0:
        _ac(ctx, S, T, R, x, _hadamard(ctx))
        return
    _expand(ctx, S, T, R,
            lambda a, b, c: _bc(ctx, a, b, c, h - 1, x + 1),
            lambda a, b, c: _bc(ctx, a, b, c, h - 1, x))


def _dc(ctx, S, T, R, h, x):
    _ac(ctx, S, T, R, x, lambda s, t, r: _bc(ctx, s, t, r, h, 0))


def _cc(ctx, S, T, R, h, x):
    from .predict import cc_fits
    if cc_fits(ctx.cp, h, ctx.M):
        _dc(ctx, S, T, R, h, x)
        return
    _expand(ctx, S, T, R,
            lambda a, b, c: _cc(ctx, a, b, c, h - 1, x + 1),
            lambda a, b, c: _cc(ctx, a, b, c, h - 1, x))


# instances


def _stack(blocks):
    blocks = list(blocks)
    out = np.empty((len(blocks),) + blocks[0].shape, dtype=blocks[0].dtype)
    for i, b in enumerate(blocks):
        out[i] = b
    return out


def _exponent(n, b):
    if b == 1:
        return 0 if n == 1 else None
    e = 0
    while n > 1:
        if n % b:
            return None
        n //= b
        e += 1
    return e


def instance_shape(d, S, T):
    """(h, x) of the instance (S, T) for decomposition d."""
    n0, m0, k0 = d.dims
    S = S if isinstance(S, BlockVector) else BlockVector(S)
    T = T if isinstance(T, BlockVector) else BlockVector(T)
    r, c = S.shape
    r2, c2 = T.shape
    pairs = [(r, n0), (c, m0), (r2, m0), (c2, k0)]
    hs = {_exponent(v, b) for v, b in pairs if b > 1}
    ones_ok = all(v == 1 for v, b in pairs if b == 1)
    if c != r2 or len(hs) != 1 or None in hs or not ones_ok:
        raise ShapeError("blocks %s and %s are not n0^h x m0^h and m0^h x k0^h" % (S.shape, T.shape))
    h = hs.pop()
    x = _exponent(len(S), d.p11)
    x2 = _exponent(len(T), d.p11b)
    if x is None or x != x2:
        raise ShapeError("lengths %d and %d are not p11^x and p11'^x for one x" % (len(S), len(T)))
    return h, x


def _run(d, S, T, body, machine=None, mode=None):
    S = S if isinstance(S, BlockVector) else BlockVector(S)
    T = T if isinstance(T, BlockVector) else BlockVector(T)
    h, x = instance_shape(d, S, T)
    Sa = _stack(S.blocks)
    Ta = _stack(T.blocks)
    if mode is None:
        mode = "exact" if Sa.dtype == object else "float"
    mach = machine or Machine(mode)
    sb = mach.adopt(Sa, "A", "S")
    tb = mach.adopt(Ta, "B", "T")
    n0, m0, k0 = d.dims
    rb = mach.new((d.q1 ** x, n0 ** h, k0 ** h), "C", "R")
    mach.mark_base()
    ctx = body(mach)
    ctx[0](ctx[1], sb, tb, rb, h, x)
    return BlockVector(list(rb.data)), mach


def ac(d, S, T, machine=None):
    """x-instance with scalar blocks."""
    S = S if isinstance(S, BlockVector) else BlockVector.scalars(S)
    T = T if isinstance(T, BlockVector) else BlockVector.scalars(T)
    if S.shape != (1, 1) or T.shape != (1, 1):
        raise ShapeError("ac takes scalar blocks, got %s" % (S.shape,))
    out, _ = _run(d, S, T, lambda mach: (
        lambda ctx, s, t, r, h, x: _ac(ctx, s, t, r, x, _hadamard(ctx)),
        Context(d, mach)), machine)
    return out


def bc(d, S, T, machine=None):
    out, _ = _run(d, S, T, lambda mach: (_bc, Context(d, mach)), machine)
    return out


def dc(d, S, T, machine=None):
    out, _ = _run(d, S, T, lambda mach: (_dc, Context(d, mach)), machine)
    return out


def _cost_params(d, cp):
    if cp is not None:
        return cp
    cached = getattr(d, "_cost_params", None)
    if cached is None:
        from .decomposition import derive_cost_parameters
        cached = derive_cost_parameters(d)
        d._cost_params = cached
    return cached


def cc(d, S, T, M, machine=None, cp=None):
    from .predict import Z
    cp = _cost_params(d, cp)
    need = Z(cp, 0, 0)
    if M < need:
        raise ValueError("M = %s is below the minimum %s words needed at the base case"
                         % (M, need))
    out, _ = _run(d, S, T, lambda mach: (_cc, Context(d, mach, cp, M)), machine)
    return out


def f_expand(d, S, T, xi1, xi2, machine=None):
    """F(xi1, xi2, S, T) on a (h, x) instance with h >= 1, using the staged
    expansion.  xi1 / xi2 take BlockVectors and return BlockVectors."""
    S = S if isinstance(S, BlockVector) else BlockVector(S)
    T = T if isinstance(T, BlockVector) else BlockVector(T)

    def wrap(xi):
        def call(a, b, c):
            res = xi(BlockVector(list(a.data)), BlockVector(list(b.data)))
            c.data[...] = _stack(res.blocks)
        return call

    def body(mach):
        def run(ctx, s, t, r, h, x):
            if h < 1:
                raise ShapeError("expansion needs block level h >= 1")
            _expand(ctx, s, t, r, wrap(xi1), wrap(xi2))
        return run, Context(d, mach)

    out, _ = _run(d, S, T, body, machine)
    return out


# whole-matrix entry points


def _single(A):
    return BlockVector([np.asarray(A)])


def run_engine(d, A, B, engine="bc", M=None, machine=None, cp=None):
    """C for A, B under the transformed algorithm's coordinates (no basis change)."""
    if engine == "bc":
        return bc(d, _single(A), _single(B), machine)[0]
    if engine == "dc":
        return dc(d, _single(A), _single(B), machine)[0]
    if engine == "cc":
        return cc(d, _single(A), _single(B), M, machine, cp)[0]
    raise ValueError("unknown engine %r" % engine)


def _star(d, A, B, engine, M=None, machine=None, parts=None, cp=None):
    A = np.asarray(A)
    B = np.asarray(B)
    check_pure_power(d.alg, A, B)
    mode = "exact" if A.dtype == object else "float"
    mach = machine or Machine(mode)
    n0, m0, k0 = d.dims
    counts = {}
    ident = d.basis.is_identity or A.shape[0] * A.shape[1] == 1

    def tick(name, fn):
        before = mach.adds + mach.smults + mach.emults
        out = fn()
        counts[name] = mach.adds + mach.smults + mach.emults - before
        return out

    At = A if ident else tick("gamma1", lambda: basis_transform(d.basis.eta[0], A, (n0, m0), mach))
    Bt = B if ident else tick("gamma2", lambda: basis_transform(d.basis.eta[1], B, (m0, k0), mach))
    Ct = tick("engine", lambda: run_engine(d, At, Bt, engine, M, mach, cp))
    C = Ct if ident else tick("gamma3_inv", lambda: basis_transform(d.basis.output_map(), Ct,
                                                                   (n0, k0), mach))
    if parts is not None:
        parts.update(counts)
    return C


def bc_star(d, A, B, machine=None, parts=None):
    return _star(d, A, B, "bc", machine=machine, parts=parts)


def cc_star(d, A, B, M, machine=None, parts=None, cp=None):
    return _star(d, A, B, "cc", M=M, machine=machine, parts=parts, cp=cp)


def ab(d, A, B, cutoff=1, machine=None, parts=None):
    """Alternative-basis recursion on the transformed algorithm, no decomposition."""
    return ab_multiply(d.alg, d.basis, A, B, cutoff, machine, parts)


ENGINES = ("naive", "recursive", "ab", "ac", "bc", "dc", "cc", "bc-star", "cc-star")


# dry run of the expansion


def expansion_profile(d):
    """Operation counts per operand side and extra words per side of one
    expansion step with unit-size elements and empty component multipliers."""
    n0, m0, k0 = d.dims
    mach = Machine("float")
    S = mach.adopt(np.ones((1, n0, m0)), "A")
    T = mach.adopt(np.ones((1, m0, k0)), "B")
    R = mach.new((1, n0, k0), "C")
    mach.mark_base()
    base = dict(mach.live_cat)
    ctx = Context(d, mach)
    noop = lambda a, b, c: None
    _expand(ctx, S, T, R, noop, noop)
    ops = (mach.ops_cat["A"], mach.ops_cat["B"], mach.ops_cat["C"])
    alpha = tuple(mach.peak_cat[c] - base[c] for c in "ABC")
    return {"ops": ops, "alpha": alpha, "peak": mach.peak, "peak_extra": mach.peak - mach.base_words}
