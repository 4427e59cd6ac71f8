"""Exact matrices, block vectors and the combinator algebra over them.

Scalars are Python ints or Fractions held in numpy object arrays, so every
operation is exact.  Float mode (float64 arrays) exists for benchmarking.
"""
import logging
from fractions import Fraction

import numpy as np

log = logging.getLogger(__name__)


class ShapeError(ValueError):
    pass


def scalar(v):
    """Parse an int, Fraction or 'a/b' string into an exact rational."""
    if isinstance(v, str):
        s = v.strip()
        if "/" in s:
            num, den = s.split("/", 1)
            den = int(den)
            if den == 0:
                raise ZeroDivisionError("zero denominator in %r" % v)
            v = Fraction(int(num), den)
        else:
            v = int(s)
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, float):
        if not v.is_integer():
            raise TypeError("refusing to turn float %r into a rational" % v)
        return int(v)
    raise TypeError("not a scalar: %r" % (v,))


def fmt_scalar(v):
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return "%d/%d" % (v.numerator, v.denominator)


def matrix(rows, mode="exact"):
    """Build a 2-D matrix from nested rows."""
    if mode == "float":
        return np.array(rows, dtype=float, ndmin=2)
    a = np.array(rows, dtype=object, ndmin=2)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = scalar(v)
    return out


def zeros(shape, mode="exact"):
    if mode == "float":
        return np.zeros(shape)
    out = np.empty(shape, dtype=object)
    out.fill(0)
    return out


def identity(n, mode="exact"):
    out = zeros((n, n), mode)
    for i in range(n):
        out[i, i] = 1
    return out


def to_mode(A, mode):
    if mode == "float":
        return np.asarray(A, dtype=float)
    if A.dtype == object:
        return A
    return matrix(A.tolist())


def is_exact(A):
    return A.dtype == object


def normalize(A):
    """Return A with Fractions of denominator 1 collapsed to ints."""
    if not is_exact(A):
        return A
    out = np.empty(A.shape, dtype=object)
    for idx, v in np.ndenumerate(A):
        out[idx] = scalar(v)
    return out


def mat_equal(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        return False
    return bool(np.all(A == B))


def naive_multiply(A, B):
    """Classical product, one dot product per entry."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError("cannot multiply %s by %s" % (A.shape, B.shape))
    if not is_exact(A) and not is_exact(B):
        return A @ B
    n, m = A.shape
    k = B.shape[1]
    C = zeros((n, k))
    for i in range(n):
        row = A[i]
        for j in range(k):
            col = B[:, j]
            s = 0
            for r in range(m):
                if row[r] and col[r]:
                    s += row[r] * col[r]
            C[i, j] = s
    return C


def inverse(Q):
    """Exact Gauss-Jordan inverse over the rationals."""
    Q = np.asarray(Q)
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise ShapeError("inverse needs a square matrix, got %s" % (Q.shape,))
    a = [[Fraction(Q[i, j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return matrix([row[n:] for row in a])


def split_blocks(A, m, n):
    """Cut A into an m x n grid of equal blocks, listed row-major."""
    A = np.asarray(A)
    R, C = A.shape
    if R % m or C % n:
        raise ShapeError("%dx%d matrix does not split into a %dx%d grid" % (R, C, m, n))
    br, bc = R // m, C // n
    return [A[i * br:(i + 1) * br, j * bc:(j + 1) * bc] for i in range(m) for j in range(n)]


def assemble(blocks, m, n):
    """Inverse of split_blocks."""
    if len(blocks) != m * n:
        raise ShapeError("need %d blocks for a %dx%d grid, got %d" % (m * n, m, n, len(blocks)))
    rows = [np.concatenate(blocks[i * n:(i + 1) * n], axis=1) for i in range(m)]
    return np.concatenate(rows, axis=0)


def lincomb(coeffs, blocks, like=None):
    """sum_i coeffs[i] * blocks[i], skipping zero coefficients."""
    acc = None
    for c, b in zip(coeffs, blocks):
        if c == 0:
            continue
        if c == 1:
            term = b
        elif c == -1:
            term = -b
        else:
            term = c * b
        acc = term.copy() if acc is None else acc + term
    if acc is None:
        ref = like if like is not None else blocks[0]
        return zeros(ref.shape) if is_exact(ref) else np.zeros(ref.shape)
    return acc


def op_count(Q):
    """(additions, scalar multiplications) of y = Q x evaluated row by row.

    Additions: per row, nonzeros minus one.  Scalar multiplications: entries
    outside {0, 1, -1}.
    """
    Q = np.asarray(Q)
    adds = 0
    mults = 0
    for row in Q:
        nz = [v for v in row if v != 0]
        adds += max(len(nz) - 1, 0)
        mults += sum(1 for v in nz if v != 1 and v != -1)
    return adds, mults


class LinearMap:
    """A q x p matrix acting on block coordinates.

    in_shape=(m, n) lets the map consume a matrix cut into an m x n grid.
    out_shape=(a, b) makes the map assemble its q outputs into one block
    matrix instead of returning q separate blocks.
    """

    def __init__(self, Q, in_shape=None, out_shape=None, name=None):
        Q = np.asarray(Q)
        if Q.dtype != object and Q.dtype.kind in "iu":
            Q = matrix(Q.tolist())
        if Q.ndim != 2:
            raise ShapeError("map matrix must be 2-D")
        self.Q = Q
        self.out_dim, self.in_dim = Q.shape
        if in_shape is not None and in_shape[0] * in_shape[1] != self.in_dim:
            raise ShapeError("in_shape %s does not match %d inputs" % (in_shape, self.in_dim))
        if out_shape is not None and out_shape[0] * out_shape[1] != self.out_dim:
            raise ShapeError("out_shape %s does not match %d outputs" % (out_shape, self.out_dim))
        self.in_shape = in_shape
        self.out_shape = out_shape
        self.name = name

    @classmethod
    def identity(cls, n):
        return cls(identity(n))

    def ops(self):
        return op_count(self.Q)

    def n_ops(self):
        a, m = op_count(self.Q)
        return a + m

    def __repr__(self):
        return "LinearMap(%s, %dx%d)" % (self.name or "", self.out_dim, self.in_dim)


class InterceptionMap:
    """Select positions i_1 < ... < i_t (1-based) out of a length-`size` vector."""

    def __init__(self, indices, size):
        idx = tuple(int(i) for i in indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("interception indices must be strictly increasing: %s" % (idx,))
        if idx and (idx[0] < 1 or idx[-1] > size):
            raise IndexError("interception indices %s outside 1..%d" % (idx, size))
        self.indices = idx
        self.size = int(size)

    @classmethod
    def full(cls, size):
        return cls(range(1, size + 1), size)

    @property
    def positions(self):
        return [i - 1 for i in self.indices]

    def __len__(self):
        return len(self.indices)

    def matrix(self):
        Q = zeros((len(self.indices), self.size))
        for r, i in enumerate(self.indices):
            Q[r, i - 1] = 1
        return Q

    def __repr__(self):
        return "InterceptionMap(%s of %d)" % (list(self.indices), self.size)


class BlockVector:
    """Nonempty sequence of equally shaped matrices."""

    def __init__(self, blocks):
        blocks = [np.asarray(b) for b in blocks]
        blocks = [b.reshape(1, 1) if b.ndim == 0 else b for b in blocks]
        if not blocks:
            raise ShapeError("a block vector cannot be empty")
        shape = blocks[0].shape
        for b in blocks:
            if b.shape != shape:
                raise ShapeError("mixed block shapes %s and %s" % (shape, b.shape))
        self.blocks = tuple(blocks)
        self.shape = shape

    @classmethod
    def scalars(cls, values):
        return cls([matrix([[scalar(v)]]) for v in values])

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return BlockVector(self.blocks[i])
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other):
        if not isinstance(other, BlockVector) or len(self) != len(other):
            return False
        return all(mat_equal(a, b) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        return "BlockVector(len=%d, shape=%s)" % (len(self), self.shape)

    def scale(self, lam):
        return BlockVector([lam * b for b in self.blocks])

    def __add__(self, other):
        if len(self) != len(other):
            raise ShapeError("length mismatch")
        return BlockVector([a + b for a, b in zip(self.blocks, other.blocks)])

    def values(self):
        """Flatten a vector of 1x1 blocks into a list of scalars."""
        return [b[0, 0] for b in self.blocks]


def _bv(a):
    return a if isinstance(a, BlockVector) else BlockVector(a)


def oplus(*vectors):
    """Concatenation, folded as c1 + (c2 + (...))."""
    if not vectors:
        raise ShapeError("oplus needs at least one operand")
    vectors = [_bv(v) for v in vectors]
    out = vectors[-1]
    for v in reversed(vectors[:-1]):
        if v.shape != out.shape:
            raise ShapeError("oplus of blocks shaped %s and %s" % (v.shape, out.shape))
        out = BlockVector(v.blocks + out.blocks)
    return out


def _apply_blocks(phi, blocks):
    if len(blocks) != phi.in_dim:
        raise ShapeError("map expects %d blocks, got %d" % (phi.in_dim, len(blocks)))
    out = [lincomb(phi.Q[j], blocks) for j in range(phi.out_dim)]
    if phi.out_shape is not None:
        return [assemble(out, *phi.out_shape)]
    return out


def apply_map(phi, a):
    """Block-lifted application: output block j = sum_i Q[j, i] a_i.

    `a` may also be a plain matrix when the map has an in_shape.
    """
    if not isinstance(a, BlockVector) and phi.in_shape is not None:
        a = BlockVector(split_blocks(a, *phi.in_shape))
    a = _bv(a)
    return BlockVector(_apply_blocks(phi, list(a.blocks)))


def apply_chunked(phi, a):
    """Apply phi to a vector of length in_dim * L read as in_dim chunks of L."""
    a = _bv(a)
    if len(a) % phi.in_dim:
        raise ShapeError("length %d is not a multiple of %d" % (len(a), phi.in_dim))
    L = len(a) // phi.in_dim
    if L == 1:
        return apply_map(phi, a)
    if phi.out_shape is not None:
        raise ShapeError("assembling maps need chunks of length one")
    chunks = [a.blocks[i * L:(i + 1) * L] for i in range(phi.in_dim)]
    out = []
    for j in range(phi.out_dim):
        out.extend(lincomb(phi.Q[j], [c[e] for c in chunks]) for e in range(L))
    return BlockVector(out)


def apply_interception(ell, a):
    a = _bv(a)
    if len(a) != ell.size:
        raise ShapeError("interception over %d entries applied to length %d" % (ell.size, len(a)))
    return BlockVector([a.blocks[p] for p in ell.positions])


def ell_component(ell, j, a):
    """The j-th selected entry (1-based j), written ell^j(a)."""
    a = _bv(a)
    if not 1 <= j <= len(ell):
        raise IndexError("component %d of a %d-entry interception" % (j, len(ell)))
    if len(a) != ell.size:
        raise ShapeError("interception over %d entries applied to length %d" % (ell.size, len(a)))
    return a.blocks[ell.indices[j - 1] - 1]


def phi_sum(phi, operands, arities):
    """Apply phi to aligned chunks: operand i is read as r chunks of arities[i]."""
    operands = [_bv(a) for a in operands]
    if len(operands) != len(arities):
        raise ShapeError("need one arity per operand")
    if sum(arities) != phi.in_dim:
        raise ShapeError("arities sum to %d, map takes %d" % (sum(arities), phi.in_dim))
    rs = set()
    for a, p in zip(operands, arities):
        if len(a) % p:
            raise ShapeError("operand of length %d is not r * %d" % (len(a), p))
        rs.add(len(a) // p)
    if len(rs) != 1:
        raise ShapeError("operands have no common chunk count: %s" % sorted(rs))
    if len(set(arities)) > 1:
        log.info("phi_sum with mixed arities %s", list(arities))
    r = rs.pop()
    out = []
    for j in range(r):
        ins = []
        for a, p in zip(operands, arities):
            ins.extend(a.blocks[j * p:(j + 1) * p])
        out.extend(_apply_blocks(phi, ins))
    return BlockVector(out)


def circ_compose(stages, a):
    """phi_1 ell_1 o ... o phi_t ell_t (a).

    stages is a list of (phi, ell); phi None means identity, ell None means the
    full-range interception (then phi gives the arity).  The input is read as
    ell_1.size chunks, each fed to the remaining stages.
    """
    a = _bv(a)
    if not stages:
        return a
    phi, ell = stages[0]
    if ell is None:
        if phi is None:
            raise ShapeError("stage needs a map or an interception")
        ell = InterceptionMap.full(phi.in_dim)
    if len(a) % ell.size:
        raise ShapeError("length %d does not split into %d chunks" % (len(a), ell.size))
    L = len(a) // ell.size
    parts = []
    for p in ell.positions:
        part = BlockVector(a.blocks[p * L:(p + 1) * L])
        parts.append(circ_compose(stages[1:], part) if len(stages) > 1 else part)
    if len(stages) == 1 and L != 1:
        raise ShapeError("stage shapes do not chain: %d left over" % L)
    cat = oplus(*parts)
    if phi is None:
        return cat
    if phi.in_dim != len(ell):
        raise ShapeError("map takes %d, interception gives %d" % (phi.in_dim, len(ell)))
    return apply_chunked(phi, cat)


def star_apply(maps, A):
    """phi_1 * ... * phi_t (A); phi_t acts on the coarsest blocks.

    A is either a matrix (maps need in_shape) or a BlockVector (maps act on
    contiguous chunks).
    """
    if not maps:
        return _bv([A]) if not isinstance(A, BlockVector) else A
    phi = maps[-1]
    if isinstance(A, BlockVector):
        if len(A) % phi.in_dim:
            raise ShapeError("length %d not divisible by %d" % (len(A), phi.in_dim))
        b = apply_chunked(phi, A)
        L = len(b) // phi.out_dim
        if len(maps) == 1:
            return b
        return oplus(*[star_apply(maps[:-1], b[i * L:(i + 1) * L]) for i in range(phi.out_dim)])
    if phi.in_shape is None:
        raise ShapeError("matrix input needs maps with in_shape")
    b = apply_map(phi, BlockVector(split_blocks(A, *phi.in_shape)))
    return oplus(*[star_apply(maps[:-1], blk) for blk in b.blocks])


def power_map(phi, k, A):
    """phi^k per the recursive definition; phi^1 = phi."""
    A = _bv(A)
    p0 = phi.in_dim
    if len(A) != p0 ** k:
        raise ShapeError("length %d is not %d^%d" % (len(A), p0, k))
    if k == 0:
        return A
    if k == 1:
        return apply_map(phi, A)
    L = p0 ** (k - 1)
    parts = [power_map(phi, k - 1, A[i * L:(i + 1) * L]) for i in range(p0)]
    return apply_chunked(phi, oplus(*parts))


def kron(*mats):
    out = matrix([[1]])
    for M in mats:
        out = np.kron(out, np.asarray(M, dtype=object))
    return out
