"""Algebra decompositions of a (basis-transformed) bilinear algorithm, their
validation, derived cost parameters, Kronecker combination and file format.

Component 1 intercepts p1 products (ell1) and factors their encodings as
psi12 @ psi11 and phi12 @ phi11; its decoding is varphi1 followed by the
first q1 columns of varphi0.  Every other product is a component of its own
whose varphi0 column is the product's decoding row.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
import itertools

import numpy as np

from .linalg import (ShapeError, matrix, zeros, identity, naive_multiply, mat_equal,
                     op_count, kron, scalar, fmt_scalar, InterceptionMap)
from .bilinear import (BilinearAlgorithm, BasisTriple, validate_algorithm, kron_product,
                       _kron_perm, _permute_cols, grid_transpose_perm)

log = logging.getLogger(__name__)


class DecompositionError(ValueError):
    pass


def _n_ops(Q):
    a, m = op_count(Q)
    return a + m


class AlgebraDecomposition:
    """alg: the Brent-valid algorithm; basis: BasisTriple (identity if None).
    The maps act on the transformed algorithm alg' = basis.transform_algorithm(alg)."""

    def __init__(self, alg, ell1, trailing, psi11, psi12, phi11, phi12, varphi1, varphi0,
                 basis=None, name=None, levels=None):
        self.alg = alg
        self.basis = basis if basis is not None else BasisTriple.identity(alg)
        self.base = self.basis.transform_algorithm(alg) if not self.basis.is_identity else alg
        t = alg.t
        self.ell1 = ell1 if isinstance(ell1, InterceptionMap) else InterceptionMap(ell1, t)
        self.trailing = [int(i) for i in trailing]       # 1-based, combining order
        self.psi11 = matrix(np.asarray(psi11, dtype=object).tolist())
        self.psi12 = matrix(np.asarray(psi12, dtype=object).tolist())
        self.phi11 = matrix(np.asarray(phi11, dtype=object).tolist())
        self.phi12 = matrix(np.asarray(phi12, dtype=object).tolist())
        self.varphi1 = matrix(np.asarray(varphi1, dtype=object).tolist())
        self.varphi0 = matrix(np.asarray(varphi0, dtype=object).tolist())
        self.name = name or alg.name
        # per-level pieces for staged expansion (set by combine_decompositions)
        self.levels = levels

    # sizes
    @property
    def t(self):
        return self.alg.t

    @property
    def dims(self):
        return self.alg.dims

    @property
    def p1(self):
        return len(self.ell1)

    @property
    def q1(self):
        return self.varphi1.shape[0]

    @property
    def p11(self):
        return self.psi11.shape[0]

    @property
    def p11b(self):
        return self.phi11.shape[0]

    @property
    def h(self):
        return self.t - self.p1 + 1

    @property
    def areas(self):
        n0, m0, k0 = self.dims
        return (n0 * m0, m0 * k0, n0 * k0)

    @property
    def stages(self):
        return self.levels if self.levels else [self]

    def g(self):
        """varphi0 restricted to the component-1 outputs."""
        return self.varphi0[:, :self.q1]

    def __repr__(self):
        return "<decomposition %s of <%d,%d,%d;%d>, p1=%d>" % ((self.name,) + self.dims + (self.t, self.p1))


@dataclass
class ValidityReport:
    ok: bool
    identity: str = ""
    row: int = None
    message: str = ""

    def __bool__(self):
        return self.ok


def _fail(identity, msg, row=None):
    return ValidityReport(False, identity, row, msg)


def _first_bad_row(X, Y):
    for i in range(X.shape[0]):
        if not mat_equal(X[i], Y[i]):
            return i
    return None


def validate_decomposition(d):
    n0, m0, k0 = d.dims
    t = d.t
    rep = validate_algorithm(d.alg)
    if not rep.ok:
        return _fail("brent", rep.message)
    a1, a2, a3 = d.areas
    shapes = [("psi11", d.psi11, (d.p11, a1)), ("psi12", d.psi12, (d.p1, d.p11)),
              ("phi11", d.phi11, (d.p11b, a2)), ("phi12", d.phi12, (d.p1, d.p11b)),
              ("varphi1", d.varphi1, (d.q1, d.p1)),
              ("varphi0", d.varphi0, (a3, d.q1 + t - d.p1))]
    for nm, M, want in shapes:
        if M.shape != want:
            return _fail("shape", "%s has shape %s, expected %s" % (nm, M.shape, want))
    ell = list(d.ell1.indices)
    tr = d.trailing
    if len(set(tr)) != len(tr):
        return _fail("structure", "trailing indices repeat")
    if set(ell) & set(tr):
        return _fail("structure", "trailing indices overlap ell1: %s" % sorted(set(ell) & set(tr)))
    if sorted(ell + tr) != list(range(1, t + 1)):
        return _fail("structure", "ell1 and trailing do not cover 1..%d" % t)
    if d.p11 < 2 or d.p11b < 2 or d.q1 < 2:
        return _fail("structure", "need p11, p11', q1 >= 2 (got %d, %d, %d)" % (d.p11, d.p11b, d.q1))
    if t - d.p1 <= max(d.areas):
        return _fail("structure", "t - p1 = %d is not above the largest block area %d"
                     % (t - d.p1, max(d.areas)))
    U, V, W = d.base.U, d.base.V, d.base.W
    rows = [i - 1 for i in ell]
    lhs = naive_multiply(d.psi12, d.psi11)
    r = _first_bad_row(lhs, U[rows])
    if r is not None:
        return _fail("psi", "psi12·psi11 ≠ U′[ell1] at row %d" % (r + 1), r + 1)
    lhs = naive_multiply(d.phi12, d.phi11)
    r = _first_bad_row(lhs, V[rows])
    if r is not None:
        return _fail("phi", "phi12·phi11 ≠ V′[ell1] at row %d" % (r + 1), r + 1)
    # W'^T z = varphi0(varphi1(z[ell1]) + z[trailing]) as matrices
    Wt = np.ascontiguousarray(W.T)
    comb = zeros((a3, t))
    g1 = naive_multiply(d.g(), d.varphi1)
    for c, i in enumerate(ell):
        comb[:, i - 1] = g1[:, c]
    for e, i in enumerate(tr):
        comb[:, i - 1] = d.varphi0[:, d.q1 + e]
    r = _first_bad_row(comb, Wt)
    if r is not None:
        return _fail("varphi", "varphi0(varphi1 ⊕ trailing) ≠ W′ᵀ at output row %d" % (r + 1), r + 1)
    return ValidityReport(True, message="decomposition identities hold")


# cost parameters


@dataclass
class CostParameters:
    t: int
    p1: int
    l1: tuple     # linear ops of psi12, phi12, varphi1
    l2: tuple     # linear ops of the expansion: A side, B side, combine
    l3: tuple     # p11, p11', q1
    l4: tuple     # block areas of A, B, C
    alpha: tuple
    beta_i: tuple
    u0: int = 0
    r: int = 0

    @property
    def beta(self):
        return sum(1 + b for b in self.beta_i)

    def l(self, i, j):
        """1-based access l(i, j) = ell_{i,j}."""
        return (self.l1, self.l2, self.l3, self.l4)[j - 1][i - 1]

    def as_dict(self):
        return {"t": self.t, "p1": self.p1, "l1": self.l1, "l2": self.l2, "l3": self.l3,
                "l4": self.l4, "alpha": self.alpha, "beta_i": tuple(str(b) for b in self.beta_i),
                "beta": str(self.beta), "u0": self.u0, "r": self.r}


def derive_cost_parameters(d, expansion=None):
    """ell_{i,1} from the factor maps, ell_{i,2} and alpha from a dry run of the
    expansion with unit-size elements (so they describe exactly what the
    engines execute)."""
    from .engines import expansion_profile
    prof = expansion if expansion is not None else expansion_profile(d)
    l1 = (_n_ops(d.psi12), _n_ops(d.phi12), _n_ops(d.varphi1))
    l3 = (d.p11, d.p11b, d.q1)
    l4 = d.areas
    for i in range(3):
        if l3[i] <= 1:
            raise DecompositionError("ell_%d,3 = %d makes beta_%d undefined" % (i + 1, l3[i], i + 1))
        if l4[i] <= l3[i]:
            raise DecompositionError("ell_%d,4 = %d is not above ell_%d,3 = %d; beta_%d undefined"
                                     % (i + 1, l4[i], i + 1, l3[i], i + 1))
    alpha = tuple(prof["alpha"])
    beta_i = tuple(max(Fraction(alpha[i], l4[i] - l3[i]), Fraction(1, l3[i] - 1)) for i in range(3))
    return CostParameters(d.t, d.p1, l1, tuple(prof["ops"]), l3, l4, alpha, beta_i,
                          u0=max(l4), r=max(l3))


# Kronecker combination


def _kron_square(mats, shapes):
    """kron of per-level coordinate maps with rows and columns moved to the
    row-major coordinates of the combined grid."""
    K = kron(*mats)
    perm, _, _ = _kron_perm(shapes)
    out = zeros(K.shape)
    for p, P in enumerate(perm):
        for q, Qi in enumerate(perm):
            out[P, Qi] = K[p, q]
    return out


def combine_decompositions(per_level):
    d1, d2, d3 = per_level if len(per_level) == 3 else (None, None, None)
    if d1 is None:
        raise ValueError("need exactly three per-level decompositions")
    for d in per_level:
        rep = validate_decomposition(d)
        if not rep.ok:
            raise DecompositionError("per-level decomposition %s invalid: %s" % (d.name, rep.message))
    alg = kron_product(*[d.alg for d in per_level])
    shpA = [(d.dims[0], d.dims[1]) for d in per_level]
    shpB = [(d.dims[1], d.dims[2]) for d in per_level]
    shpC = [(d.dims[0], d.dims[2]) for d in per_level]
    if all(d.basis.is_identity for d in per_level):
        basis = None
    else:
        basis = BasisTriple(_kron_square([d.basis.eta[0] for d in per_level], shpA),
                            _kron_square([d.basis.eta[1] for d in per_level], shpB),
                            _kron_square([d.basis.eta[2] for d in per_level], shpC))
    ts = [d.t for d in per_level]

    def flat(combo):
        return (combo[0] - 1) * ts[1] * ts[2] + (combo[1] - 1) * ts[2] + combo[2]

    # rows of the kron'd factor maps follow the per-level ell1 orders
    ell1 = [flat(c) for c in itertools.product(*[list(d.ell1.indices) for d in per_level])]
    first = set(ell1)
    trailing = [i for i in range(1, ts[0] * ts[1] * ts[2] + 1) if i not in first]
    permA, _, _ = _kron_perm(shpA)
    permB, _, _ = _kron_perm(shpB)
    permC, _, _ = _kron_perm(shpC)
    psi11 = _permute_cols(kron(*[d.psi11 for d in per_level]), permA)
    phi11 = _permute_cols(kron(*[d.phi11 for d in per_level]), permB)
    psi12 = kron(*[d.psi12 for d in per_level])
    phi12 = kron(*[d.phi12 for d in per_level])
    varphi1 = kron(*[d.varphi1 for d in per_level])
    gk = kron(*[d.g() for d in per_level])
    g = zeros(gk.shape)
    for p, P in enumerate(permC):
        g[P] = gk[p]
    tmp = basis.transform_algorithm(alg) if basis is not None else alg
    cols = [g] + [tmp.W[i - 1].reshape(-1, 1) for i in trailing]
    varphi0 = np.concatenate(cols, axis=1) if trailing else g
    name = "(" + "*".join(d.name for d in per_level) + ")"
    out = AlgebraDecomposition(alg, ell1, trailing, psi11, psi12, phi11, phi12, varphi1,
                               varphi0, basis=basis, name=name, levels=list(per_level))
    return out


# needed memory of the expansion


def needed_memory(u, lam, z):
    """delta_1 of the staged expansion's memory recurrence.

    u = (u1, u2, u3) block areas of A, B, C; lam[i][j] for levels i = 1..3 and
    operands j = 1..3 are the component-1 output lengths at each level; z are
    the element sizes.  Returns (delta_1, coefficient of each z_i)."""
    u1, u2, u3 = u
    z1, z2, z3 = z
    U = u1 * u2 * u3
    zs = (z1, z2, z3)
    lam = [[1, 1, 1]] + [list(r) for r in lam]         # lam[0][*] = 1

    def span(i, j):
        """sum_{x<=j} prod_{y<i} lam[y][x]  (j, i 1-based in the recurrence)."""
        return sum(int(np.prod([lam[y][x] for y in range(i)])) for x in range(j))

    # e_{1,i}, e_{3,z}, mu_{i,z}, e_{0,j}, e_{2,z}
    def e(i, z):
        if i == 0:
            return U * zs[z - 1] if 1 <= z <= 3 else 0
        if i == 1:
            return (U // u[z - 1]) * zs[z - 1] if 1 <= z <= 3 else 0
        if i == 2:
            # runs of length lam_{1,1}, lam_{1,2}, lam_{1,3}
            for k, v in enumerate((u3 * z1, u1 * z2, u2 * z3), 1):
                if span(2, k - 1) < z <= span(2, k):
                    return v
            return 0
        # i == 3: e_{3,z} = z_i on the i-th run
        for k in range(1, 4):
            if span(3, k - 1) < z <= span(3, k):
                return zs[k - 1]
        return 0

    def mu(i, z):
        for j in range(1, 4):
            if span(i, j - 1) < z <= span(i, j):
                return lam[i][j - 1]
        return 0

    delta = {}
    Delta = {}
    delta[(1, 0)] = sum(U * zz for zz in zs)
    Delta[(1, 0)] = U * z1
    for i in (1, 2, 3):
        if i > 1:
            jj = span(i - 1, 3)
            delta[(i, 0)] = delta[(i - 1, jj)]
            Delta[(i, 0)] = Delta[(i - 1, jj)]
        top = span(i, 3)
        two = span(i, 2)
        for j in range(1, top + 1):
            delta[(i, j)] = delta[(i, j - 1)] + max(
                0, mu(i, j - 1) * e(i, j) - delta[(i, j - 1)] + Delta[(i, j - 1)])
            if j <= two:
                Delta[(i, j)] = Delta[(i, j - 1)] + mu(i, j) * e(i, j) - e(i - 1, j)
            else:
                Delta[(i, j)] = Delta[(i, j - 1)] + mu(i, j) * e(i, j)
    jj = span(3, 3)
    delta[(4, 0)] = delta[(3, jj)]
    Delta[(4, 0)] = Delta[(3, jj)]
    lam2 = lam[2]
    lam3 = lam[3]
    lam1 = lam[1]
    d4 = delta[(4, 0)] + max(0, sum(lam2[i] * lam3[i] * zs[i] + lam3[i] * zs[i] + zs[i]
                                    for i in range(3)) - delta[(4, 0)] + Delta[(4, 0)])
    d3 = max(delta[(4, 0)], d4, sum(zs) + sum(lam2[i] * zs[i] for i in range(3))
             + sum(lam1[i] * lam2[i] * zs[i] for i in range(3)) - delta[(3, 0)] + Delta[(3, 0)])
    d2 = max(delta[(3, 0)], d3, (u3 * z1 + u1 * z2 + u2 * z3) + lam1[0] * u3 * z1
             + lam1[1] * u1 * z2 + lam1[2] * u2 * z3 + sum(zs) - delta[(2, 0)] + Delta[(2, 0)])
    head = sum(U * zs[i] + (U // u[i]) * zs[i] + zs[i] for i in range(3)) \
        + u3 * z1 + u1 * z2 + u2 * z3
    d1 = max(delta[(2, 0)], d2, head)
    return d1


def needed_memory_coefficients(u, lam):
    """beta-style split: delta_1 evaluated at unit vectors."""
    return tuple(needed_memory(u, lam, tuple(int(i == k) for i in range(3))) for k in range(3))


def level_lambdas(d):
    """lam[i] = (p11, p11', q1) of each level of a combined decomposition."""
    return [(s.p11, s.p11b, s.q1) for s in d.stages]


# file format

SECTIONS = ["U", "V", "W", "ETA1", "ETA2", "ETA3", "P1", "Q1", "ELL1", "TRAIL",
            "PSI11", "PSI12", "PHI11", "PHI12", "VARPHI1", "VARPHI0"]


class ParseError(ValueError):
    def __init__(self, line, msg):
        super().__init__("line %d: %s" % (line, msg))
        self.line = line


def _row(M):
    return " ".join(fmt_scalar(v) for v in M)


def dumps(d):
    n0, m0, k0 = d.dims
    out = ["ALGDEC v1", "# %s" % d.name, "DIMS %d %d %d %d" % (n0, m0, k0, d.t)]

    def block(tag, M):
        out.append(tag)
        out.extend(_row(r) for r in M)

    block("U", d.alg.U)
    block("V", d.alg.V)
    block("W", d.alg.W)
    if not d.basis.is_identity:
        for k in range(3):
            block("ETA%d" % (k + 1), d.basis.eta[k])
    out.append("P1 %d" % d.p1)
    out.append("Q1 %d" % d.q1)
    out.append("ELL1 " + " ".join(str(i) for i in d.ell1.indices))
    out.append("TRAIL " + " ".join(str(i) for i in d.trailing))
    for tag, M in (("PSI11", d.psi11), ("PSI12", d.psi12), ("PHI11", d.phi11),
                   ("PHI12", d.phi12), ("VARPHI1", d.varphi1), ("VARPHI0", d.varphi0)):
        block(tag, M)
    return "\n".join(out) + "\n"


def save_decomposition(d, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(d))


def loads(text, validate=True, name=None):
    lines = text.splitlines()
    items = []
    for no, raw in enumerate(lines, 1):
        s = raw.split("#", 1)[0].strip()
        if s:
            items.append((no, s.split()))
    if not items or items[0][1] != ["ALGDEC", "v1"]:
        raise ParseError(items[0][0] if items else 1, "expected header 'ALGDEC v1'")
    if len(items) < 2 or items[1][1][0] != "DIMS" or len(items[1][1]) != 5:
        raise ParseError(items[1][0] if len(items) > 1 else 1, "expected 'DIMS n0 m0 k0 t'")
    try:
        n0, m0, k0, t = (int(x) for x in items[1][1][1:])
    except ValueError:
        raise ParseError(items[1][0], "DIMS needs four integers")
    sec = {}
    scal = {}
    cur = None
    seen = []
    for no, toks in items[2:]:
        key = toks[0]
        if key in SECTIONS:
            if key in seen:
                raise ParseError(no, "section %s repeated" % key)
            if seen and SECTIONS.index(key) < SECTIONS.index(seen[-1]):
                raise ParseError(no, "section %s out of order" % key)
            seen.append(key)
            if key in ("P1", "Q1", "ELL1", "TRAIL"):
                try:
                    vals = [int(x) for x in toks[1:]]
                except ValueError:
                    raise ParseError(no, "%s expects integers" % key)
                scal[key] = (no, vals)
                cur = None
            else:
                if len(toks) > 1:
                    raise ParseError(no, "section header %s takes no values" % key)
                sec[key] = (no, [])
                cur = key
            continue
        if cur is None:
            raise ParseError(no, "unexpected data outside a matrix section: %r" % key)
        row = []
        for tok in toks:
            try:
                row.append(scalar(tok))
            except ZeroDivisionError:
                raise ParseError(no, "zero denominator in %r" % tok)
            except (ValueError, TypeError):
                raise ParseError(no, "malformed rational %r" % tok)
        if sec[cur][1] and len(row) != len(sec[cur][1][0][1]):
            raise ParseError(no, "ragged row in %s" % cur)
        sec[cur][1].append((no, row))
    for key in ("U", "V", "W", "PSI11", "PSI12", "PHI11", "PHI12", "VARPHI1", "VARPHI0"):
        if key not in sec or not sec[key][1]:
            raise ParseError(len(lines), "missing section %s" % key)
    for key in ("P1", "Q1", "ELL1", "TRAIL"):
        if key not in scal:
            raise ParseError(len(lines), "missing %s" % key)

    def mat(key):
        return matrix([r for _, r in sec[key][1]])

    try:
        alg = BilinearAlgorithm(n0, m0, k0, mat("U"), mat("V"), mat("W"), name=name or "loaded")
    except ShapeError as e:
        raise ParseError(sec["U"][0], str(e))
    basis = None
    if any(k in sec for k in ("ETA1", "ETA2", "ETA3")):
        etas = []
        for k, dim in zip(("ETA1", "ETA2", "ETA3"), (n0 * m0, m0 * k0, n0 * k0)):
            etas.append(mat(k) if k in sec else identity(dim))
        try:
            basis = BasisTriple(*etas)
        except ZeroDivisionError:
            raise ParseError(sec.get("ETA1", (1,))[0], "basis matrix is singular")
    p1 = scal["P1"][1][0]
    q1 = scal["Q1"][1][0]
    ell = scal["ELL1"][1]
    if len(ell) != p1:
        raise ParseError(scal["ELL1"][0], "ELL1 lists %d indices, P1 is %d" % (len(ell), p1))
    try:
        ell1 = InterceptionMap(ell, t)
    except (ValueError, IndexError) as e:
        raise ParseError(scal["ELL1"][0], str(e))
    d = AlgebraDecomposition(alg, ell1, scal["TRAIL"][1], mat("PSI11"), mat("PSI12"),
                             mat("PHI11"), mat("PHI12"), mat("VARPHI1"), mat("VARPHI0"),
                             basis=basis, name=name)
    if d.q1 != q1:
        raise ParseError(scal["Q1"][0], "Q1 is %d but VARPHI1 has %d rows" % (q1, d.q1))
    if validate:
        rep = validate_decomposition(d)
        if not rep.ok and rep.identity == "brent":
            alt = _transposed(d)
            if alt is not None and validate_decomposition(alt).ok:
                log.warning("%s: data uses column-major block vectorization; transposed on load",
                            name or "decomposition")
                return alt
        if not rep.ok:
            raise DecompositionError("invalid decomposition (%s): %s" % (rep.identity, rep.message))
    return d


def _transposed(d):
    """Reinterpret column-major block coordinates as this package's row-major ones."""
    n0, m0, k0 = d.dims
    pa = grid_transpose_perm(m0, n0)     # column-major (j*n0+i) -> row-major (i*m0+j)
    pb = grid_transpose_perm(k0, m0)
    pc = grid_transpose_perm(k0, n0)
    alg = BilinearAlgorithm(n0, m0, k0, _permute_cols(d.alg.U, pa), _permute_cols(d.alg.V, pb),
                            _permute_cols(d.alg.W, pc), name=d.alg.name)
    basis = None
    if not d.basis.is_identity:
        def sq(E, p):
            out = zeros(E.shape)
            for a, A in enumerate(p):
                for b, B in enumerate(p):
                    out[A, B] = E[a, b]
            return out
        basis = BasisTriple(sq(d.basis.eta[0], pa), sq(d.basis.eta[1], pb), sq(d.basis.eta[2], pc))
    v0 = zeros(d.varphi0.shape)
    for a, A in enumerate(pc):
        v0[A] = d.varphi0[a]
    try:
        return AlgebraDecomposition(alg, d.ell1, d.trailing, _permute_cols(d.psi11, pa), d.psi12,
                                    _permute_cols(d.phi11, pb), d.phi12, d.varphi1, v0,
                                    basis=basis, name=d.name)
    except Exception:
        return None


def load_decomposition(path, validate=True):
    import os
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return loads(text, validate=validate, name=os.path.splitext(os.path.basename(path))[0])


def structurally_equal(a, b):
    return (a.alg == b.alg and a.ell1.indices == b.ell1.indices and a.trailing == b.trailing
            and all(mat_equal(getattr(a, k), getattr(b, k))
                    for k in ("psi11", "psi12", "phi11", "phi12", "varphi1", "varphi0"))
            and all(mat_equal(x, y) for x, y in zip(a.basis.eta, b.basis.eta)))
