"""Bilinear <n0,m0,k0;t> algorithms: encoding/decoding matrices, the Brent
check, Kronecker composition, recursive execution and alternative bases.

Convention: block (i, j) of an n0 x m0 grid is coordinate i*m0 + j (0-based,
row-major).  Products are m = (U a) * (V b) and C = W^T m.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import (ShapeError, matrix, zeros, identity, inverse, naive_multiply,
                     split_blocks, assemble, lincomb, op_count, mat_equal, kron)
from .counters import Machine

log = logging.getLogger(__name__)


class BilinearAlgorithm:
    def __init__(self, n0, m0, k0, U, V, W, name=None):
        self.n0, self.m0, self.k0 = int(n0), int(m0), int(k0)
        self.U = matrix(np.asarray(U, dtype=object).tolist())
        self.V = matrix(np.asarray(V, dtype=object).tolist())
        self.W = matrix(np.asarray(W, dtype=object).tolist())
        self.name = name or "alg"
        t = self.U.shape[0]
        want = [(t, n0 * m0), (t, m0 * k0), (t, n0 * k0)]
        for M, w, lab in zip((self.U, self.V, self.W), want, "UVW"):
            if M.shape != w:
                raise ShapeError("%s has shape %s, expected %s" % (lab, M.shape, w))

    @property
    def t(self):
        return self.U.shape[0]

    @property
    def dims(self):
        return (self.n0, self.m0, self.k0)

    def __repr__(self):
        return "<%s %d,%d,%d;%d>" % (self.name, self.n0, self.m0, self.k0, self.t)

    def __eq__(self, other):
        return (isinstance(other, BilinearAlgorithm) and self.dims == other.dims
                and mat_equal(self.U, other.U) and mat_equal(self.V, other.V)
                and mat_equal(self.W, other.W))

    def encoding_ops(self):
        """(U adds+mults, V adds+mults, W^T adds+mults) under the row-nnz convention."""
        return (sum(op_count(self.U)), sum(op_count(self.V)), sum(op_count(self.W.T)))


@dataclass
class BrentReport:
    ok: bool
    violation: tuple = None     # (i, j, j', k, i', k'), 1-based
    value: object = None
    expected: int = None
    checked: int = 0
    message: str = ""

    def __bool__(self):
        return self.ok


def _nonzeros(row):
    return [(c, v) for c, v in enumerate(row) if v != 0]


def validate_algorithm(alg):
    """Check the Brent equations sum_r U[r,(i,j)] V[r,(j',k)] W[r,(i',k')]
    = [i=i'][j=j'][k=k'] and report the first violated index tuple."""
    n0, m0, k0 = alg.dims
    acc = {}
    for r in range(alg.t):
        us = _nonzeros(alg.U[r])
        if not us:
            continue
        vs = _nonzeros(alg.V[r])
        if not vs:
            continue
        ws = _nonzeros(alg.W[r])
        for a, x in us:
            for b, y in vs:
                xy = x * y
                for c, z in ws:
                    key = (a, b, c)
                    acc[key] = acc.get(key, 0) + xy * z
    bad = []
    for (a, b, c), v in acc.items():
        i, j = divmod(a, m0)
        j2, k = divmod(b, k0)
        i2, k2 = divmod(c, k0)
        want = int(i == i2 and j == j2 and k == k2)
        if v != want:
            bad.append(((i, j, j2, k, i2, k2), v, want))
    for i in range(n0):
        for j in range(m0):
            for k in range(k0):
                if (i * m0 + j, j * k0 + k, i * k0 + k) not in acc:
                    bad.append(((i, j, j, k, i, k), 0, 1))
    checked = (n0 * m0) * (m0 * k0) * (n0 * k0)
    if not bad:
        return BrentReport(True, checked=checked, message="Brent equations hold")
    idx, v, want = min(bad, key=lambda b: b[0])
    idx1 = tuple(x + 1 for x in idx)
    msg = ("Brent equation violated at (i,j,j',k,i',k')=%s: sum is %s, expected %d"
           % (idx1, v, want))
    return BrentReport(False, idx1, v, want, checked, msg)


def naive_algorithm(n0, m0, k0):
    """One product a_ij * b_jk per scalar term, ordered by (i, j, k)."""
    U, V, W = [], [], []
    for i in range(n0):
        for j in range(m0):
            for k in range(k0):
                u = [0] * (n0 * m0)
                v = [0] * (m0 * k0)
                w = [0] * (n0 * k0)
                u[i * m0 + j] = 1
                v[j * k0 + k] = 1
                w[i * k0 + k] = 1
                U.append(u)
                V.append(v)
                W.append(w)
    return BilinearAlgorithm(n0, m0, k0, U, V, W, name="naive%d%d%d" % (n0, m0, k0))


def strassen():
    """Strassen's <2,2,2;7>, in the form with 18 additions."""
    # coordinates: x11 x12 x21 x22
    U = [[1, 0, 0, 1],     # M1 = (A11 + A22)(B11 + B22)
         [0, 0, 1, 1],     # M2 = (A21 + A22) B11
         [1, 0, 0, 0],     # M3 = A11 (B12 - B22)
         [0, 0, 0, 1],     # M4 = A22 (B21 - B11)
         [1, 1, 0, 0],     # M5 = (A11 + A12) B22
         [-1, 0, 1, 0],    # M6 = (A21 - A11)(B11 + B12)
         [0, 1, 0, -1]]    # M7 = (A12 - A22)(B21 + B22)
    V = [[1, 0, 0, 1],
         [1, 0, 0, 0],
         [0, 1, 0, -1],
         [-1, 0, 1, 0],
         [0, 0, 0, 1],
         [1, 1, 0, 0],
         [0, 0, 1, 1]]
    # C11 = M1+M4-M5+M7, C12 = M3+M5, C21 = M2+M4, C22 = M1-M2+M3+M6
    W = [[1, 0, 0, 1],
         [0, 0, 1, -1],
         [0, 1, 0, 1],
         [1, 0, 1, 0],
         [-1, 1, 0, 0],
         [0, 0, 0, 1],
         [1, 0, 0, 0]]
    return BilinearAlgorithm(2, 2, 2, U, V, W, name="strassen")


def grid_transpose_perm(rows, cols):
    """perm[p] = coordinate of the transposed grid for coordinate p of a rows x cols grid."""
    return [j * rows + i for i in range(rows) for j in range(cols)]


def _permute_cols(M, perm):
    out = zeros(M.shape)
    for p, q in enumerate(perm):
        out[:, q] = M[:, p]
    return out


def rotate(alg):
    """Cyclic symmetry: <U,V,W> for <n,m,k> gives <V, W^t, U^t> for <m,k,n>,
    where ^t relabels columns by transposing the block grid."""
    n, m, k = alg.dims
    Wt = _permute_cols(alg.W, grid_transpose_perm(n, k))   # (i,k) -> (k,i)
    Ut = _permute_cols(alg.U, grid_transpose_perm(n, m))   # (i,j) -> (j,i)
    return BilinearAlgorithm(m, k, n, alg.V, Wt, Ut, name=alg.name + "'")


def _kron_perm(shapes):
    """Map the kron column index of per-level grid coordinates to the row-major
    coordinate of the big block matrix (level 1 coarsest)."""
    R = int(np.prod([s[0] for s in shapes]))
    C = int(np.prod([s[1] for s in shapes]))
    perm = []
    for combo in np.ndindex(*[s[0] * s[1] for s in shapes]):
        i = j = 0
        for (r, c), p in zip(shapes, combo):
            a, b = divmod(p, c)
            i = i * r + a
            j = j * c + b
        perm.append(i * C + j)
    return perm, R, C


def kron_product(*algs):
    """Tensor product of algorithms; products are indexed (r1, r2, ...) row-major."""
    n = int(np.prod([a.n0 for a in algs]))
    m = int(np.prod([a.m0 for a in algs]))
    k = int(np.prod([a.k0 for a in algs]))
    out = []
    for role, shp in (("U", lambda a: (a.n0, a.m0)), ("V", lambda a: (a.m0, a.k0)),
                      ("W", lambda a: (a.n0, a.k0))):
        K = kron(*[getattr(a, role) for a in algs])
        perm, _, _ = _kron_perm([shp(a) for a in algs])
        out.append(_permute_cols(K, perm))
    return BilinearAlgorithm(n, m, k, *out, name="x".join(a.name for a in algs))


def kron_compose(alg):
    """The <nmk, nmk, nmk; t^3> algorithm built from alg and its two rotations."""
    r1 = rotate(alg)
    r2 = rotate(r1)
    out = kron_product(alg, r1, r2)
    out.name = alg.name + "^3"
    return out


def apply_one_level(alg, A, B, inner=naive_multiply):
    A = np.asarray(A)
    B = np.asarray(B)
    n0, m0, k0 = alg.dims
    if A.shape[1] != B.shape[0] or A.shape[0] % n0 or A.shape[1] % m0 or B.shape[1] % k0:
        raise ShapeError("%s and %s do not fit a %d,%d,%d grid" % (A.shape, B.shape, n0, m0, k0))
    Ab = split_blocks(A, n0, m0)
    Bb = split_blocks(B, m0, k0)
    prods = [inner(lincomb(alg.U[r], Ab), lincomb(alg.V[r], Bb)) for r in range(alg.t)]
    Cb = [lincomb(alg.W[:, c], prods, like=prods[0]) for c in range(n0 * k0)]
    return assemble(Cb, n0, k0)


def _is_power(n, b):
    if b == 1:
        return n == 1
    while n > 1 and n % b == 0:
        n //= b
    return n == 1


def check_pure_power(alg, A, B):
    n0, m0, k0 = alg.dims
    n, m = A.shape
    m2, k = B.shape
    if m != m2:
        raise ShapeError("inner dimensions differ: %d vs %d" % (m, m2))
    for q in range(0, 64):
        if (n0 ** q, m0 ** q, k0 ** q) == (n, m, k):
            return q
        if n0 ** q > n or m0 ** q > m or k0 ** q > k:
            break
    raise ShapeError("sizes %dx%d * %dx%d are not (n0^q, m0^q, k0^q) for <%d,%d,%d>; "
                     "padding is not supported" % (n, m, m2, k, n0, m0, k0))


def _rec(mach, alg, a, b, c, cutoff):
    _, N, M = a.shape
    K = b.shape[2]
    n0, m0, k0 = alg.dims
    if max(N, M, K) <= cutoff or N % n0 or M % m0 or K % k0 or (N, M, K) == (1, 1, 1):
        mach.classical(c, a, b)
        return
    ag = a.grid(n0, m0)
    bg = b.grid(m0, k0)
    cg = c.grid(n0, k0)
    written = [False] * (n0 * k0)
    sa = ag[0].shape
    sb = bg[0].shape
    sc = cg[0].shape
    for r in range(alg.t):
        ta, fa = _encode(mach, alg.U[r], ag, sa)
        tb, fb = _encode(mach, alg.V[r], bg, sb)
        tm = mach.new(sc, "X")
        _rec(mach, alg, ta, tb, tm, cutoff)
        if fa:
            mach.free(ta)
        if fb:
            mach.free(tb)
        for col in range(n0 * k0):
            w = alg.W[r, col]
            if w != 0:
                mach.accum(cg[col], w, tm, not written[col])
                written[col] = True
        mach.free(tm)


def _encode(mach, row, grid, shape):
    nz = [(c, v) for c, v in enumerate(row) if v != 0]
    if len(nz) == 1 and nz[0][1] == 1:
        return grid[nz[0][0]], False
    out = mach.new(shape, "X")
    mach.lincomb(out, [v for _, v in nz], [grid[c] for c, _ in nz])
    return out, True


def recursive_multiply(alg, A, B, cutoff=1, machine=None):
    """Recursive execution of alg down to blocks of side <= cutoff, then the
    classical loop.  Pass a Machine to collect counts (or a trace).

    A and B may also be stacks of shape (L, n, m) and (L, m, k); all L
    products then share one recursion and the counts cover the whole batch.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    batched = A.ndim == 3
    if batched != (B.ndim == 3) or (batched and A.shape[0] != B.shape[0]):
        raise ShapeError("batched inputs need matching leading dims, got %s and %s" % (A.shape, B.shape))
    check_pure_power(alg, A[0] if batched else A, B[0] if batched else B)
    if not batched:
        A = A.reshape((1,) + A.shape)
        B = B.reshape((1,) + B.shape)
    mode = "exact" if A.dtype == object or B.dtype == object else "float"
    mach = machine or Machine(mode)
    a = mach.adopt(A, "A")
    b = mach.adopt(B, "B")
    c = mach.new((A.shape[0], A.shape[1], B.shape[2]), "C")
    mach.mark_base()
    _rec(mach, alg, a, b, c, max(int(cutoff), 1))
    return c.data if batched else c.data[0]


def strassen_additions(k):
    """Closed form for the 18-addition Strassen recursion down to scalars."""
    return 6 * (7 ** k - 4 ** k)


# alternative bases


class BasisTriple:
    def __init__(self, eta1, eta2, eta3):
        self.eta = [matrix(np.asarray(e, dtype=object).tolist()) for e in (eta1, eta2, eta3)]
        self.inv = []
        for k, e in enumerate(self.eta):
            inv = inverse(e)
            if not mat_equal(naive_multiply(e, inv), identity(e.shape[0])):
                raise ValueError("eta%d inverse check failed" % (k + 1))
            self.inv.append(inv)

    @classmethod
    def identity(cls, alg):
        n0, m0, k0 = alg.dims
        return cls(identity(n0 * m0), identity(m0 * k0), identity(n0 * k0))

    @property
    def is_identity(self):
        return all(mat_equal(e, identity(e.shape[0])) for e in self.eta)

    def transform_algorithm(self, alg):
        """<U eta1^-1, V eta2^-1, W eta3^-1>: the algorithm that runs on
        transformed operands.  It does not satisfy the Brent equations itself."""
        U = naive_multiply(alg.U, self.inv[0])
        V = naive_multiply(alg.V, self.inv[1])
        W = naive_multiply(alg.W, self.inv[2])
        return BilinearAlgorithm(alg.n0, alg.m0, alg.k0, U, V, W, name=alg.name + "~")

    def output_map(self):
        """Matrix taking transformed-output block coordinates back to C's: eta3^T."""
        return np.ascontiguousarray(self.eta[2].T)


def _transform(Q, A, rows, cols, counter):
    R, C = A.shape
    if R == 1 and C == 1 or R % rows or C % cols:
        if R != 1 or C != 1:
            raise ShapeError("%dx%d is not a power of the %dx%d grid" % (R, C, rows, cols))
        return A
    blocks = split_blocks(A, rows, cols)
    adds, mults = op_count(Q)
    w = blocks[0].size
    counter[0] += adds * w
    counter[1] += mults * w
    new = [lincomb(Q[j], blocks, like=blocks[0]) for j in range(Q.shape[0])]
    new = [_transform(Q, b, rows, cols, counter) for b in new]
    return assemble(new, rows, cols)


def basis_transform(eta, A, block_dims, machine=None):
    """Apply eta to the block-coordinate vector at every recursion level."""
    A = np.asarray(A)
    rows, cols = block_dims
    if not (_is_power(A.shape[0], rows) and _is_power(A.shape[1], cols)):
        raise ShapeError("%s is not a power of the %dx%d grid" % (A.shape, rows, cols))
    if rows == 1 and cols == 1:
        raise ShapeError("1x1 grid has no recursion")
    eta = np.asarray(eta)
    counter = [0, 0]
    out = _transform(eta, A, rows, cols, counter)
    if machine is not None:
        machine.adds += counter[0]
        machine.smults += counter[1]
    return out


def inverse_basis_transform(eta, A, block_dims, machine=None):
    return basis_transform(inverse(eta), A, block_dims, machine)


def ab_multiply(alg, basis, A, B, cutoff=1, machine=None, parts=None):
    """Alternative-basis multiplication: transform, recurse on the transformed
    algorithm, transform the result back.  `parts` (a dict) receives the
    per-stage operation counts."""
    n0, m0, k0 = alg.dims
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim == 3:
        # batch: per-instance basis changes around one shared recursion
        check_pure_power(alg, A[0], B[0])
        mode = "exact" if A.dtype == object else "float"
        mach = machine or Machine(mode)
        alg2 = basis.transform_algorithm(alg)
        fwd = lambda e, X, g: np.stack([basis_transform(e, x, g, mach) for x in X]) if X.shape[1] * X.shape[2] > 1 else X
        Ct = recursive_multiply(alg2, fwd(basis.eta[0], A, (n0, m0)), fwd(basis.eta[1], B, (m0, k0)), cutoff, mach)
        return fwd(basis.output_map(), Ct, (n0, k0))
    check_pure_power(alg, A, B)
    mode = "exact" if A.dtype == object else "float"
    mach = machine or Machine(mode)
    alg2 = basis.transform_algorithm(alg)
    stage = {}

    def run(name, fn):
        before = mach.adds + mach.smults + mach.emults
        out = fn()
        stage[name] = mach.adds + mach.smults + mach.emults - before
        return out

    At = run("gamma1", lambda: basis_transform(basis.eta[0], A, (n0, m0), mach) if A.shape[0] > 1 else A)
    Bt = run("gamma2", lambda: basis_transform(basis.eta[1], B, (m0, k0), mach) if B.shape[0] > 1 else B)
    Ct = run("engine", lambda: recursive_multiply(alg2, At, Bt, cutoff, mach))
    C = run("gamma3_inv", lambda: basis_transform(basis.output_map(), Ct, (n0, k0), mach)
            if Ct.shape[0] > 1 else Ct)
    if parts is not None:
        parts.update(stage)
    return C
