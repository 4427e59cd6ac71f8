"""Command-line front end.

    mmlab validate --fixture builtin:strassen
    mmlab count    --fixture F1 --engine bc --h 2 --x 1
    mmlab iosim    --fixture F2 --engine bc --h 3 --M 10,40,160
    mmlab predict  --fixture F1 --h 4 --M 96,1536
    mmlab table    --n 16 --M 96

Exit codes: 0 success, 1 a validation or reconciliation failure, 2 usage error.
"""
import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fixtures as F
from . import predict as P
from . import engines as E
from .bilinear import (BilinearAlgorithm, validate_algorithm, recursive_multiply,
                       _is_power)
from .cachesim import traced_run, traced_instance, io_scaling_probe, fit_exponent
from .counters import Machine, reports_to_csv, format_table
from .decomposition import (AlgebraDecomposition, ParseError, DecompositionError,
                            load_decomposition, validate_decomposition, derive_cost_parameters)
from .linalg import BlockVector, matrix, ShapeError, fmt_scalar

log = logging.getLogger("mmlab")

SCHEMA = "mmlab-report/1"

# Constants quoted from the published tables.  They are reference labels
# only and never enter a measured column.
PAPER_REFERENCE = [
    # (source, algorithm, dims, complexity, leading monomial, coefficient)
    ("paper Table 1", "original", "3,3,3;23", "arithmetic", "n^log3(23)", "7.93 (with -6.93 n^2)"),
    ("paper Table 1", "original", "3,3,3;23", "io", "n^log3(23) M^-0.42", "47.62"),
    ("paper Table 1", "Karstadt-Schwartz", "3,3,3;23", "arithmetic", "n^log3(23)", "6.58"),
    ("paper Table 1", "Karstadt-Schwartz", "3,3,3;23", "io", "n^log3(23) M^-0.42", "31.5"),
    ("paper Table 1", "Algorithm 5", "3,3,3;23", "arithmetic", "n^log3(23)", "2 (next term 4.56 n^log27(23^3-4))"),
    ("paper Table 1", "Algorithm 5", "3,3,3;23", "io", "n^log3(23) M^-0.5", "14"),
    ("paper Table 2", "original", "3,2,3;15", "arithmetic", "n^(3 log18 15)", "15.06"),
    ("paper Table 2", "original", "2,3,4;20", "arithmetic", "n^(3 log24 20)", "9.96"),
    ("paper Table 2", "original", "6,3,3;40", "arithmetic", "n^(3 log54 40)", "55.63"),
]


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    fixture: str = None
    engine: str = None
    n: list = field(default_factory=list)
    h: int = None
    x: int = 0
    M: list = field(default_factory=list)
    line: int = 1
    mode: str = "exact"
    seed: int = 0
    out: str = None
    format: str = "table"

    def check(self):
        if self.M:
            if any(m <= 0 for m in self.M):
                raise UsageError("--M values must be positive")
            if list(self.M) != sorted(set(self.M)):
                raise UsageError("--M values must be strictly ascending")
        if self.line < 1:
            raise UsageError("--line must be at least 1")
        if self.h is not None and self.h < 0 or self.x < 0:
            raise UsageError("--h and --x must be non-negative")
        if any(v < 1 for v in self.n):
            raise UsageError("--n values must be positive")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got %r" % text)


# helpers


def _load(spec):
    """Fixture lookup; missing files are usage errors."""
    try:
        return F.resolve(spec)
    except FileNotFoundError:
        raise UsageError("fixture %r not found (looked in . and %s)" % (spec, F.fixture_dir()))
    except KeyError as e:
        raise UsageError(str(e.args[0]))


def _rand(rng, rows, cols, mode):
    v = rng.integers(-4, 5, size=(rows, cols))
    if mode == "exact":
        return matrix(v.tolist())
    return v.astype(float)


def _log(n, b):
    h = 0
    while n > 1:
        if n % b:
            return None
        n //= b
        h += 1
    return h


def _levels(cfg, dims):
    """Recursion depth from --h, or from --n for square bases."""
    if cfg.n:
        n0, m0, k0 = dims
        n = cfg.n[0]
        if not n0 == m0 == k0:
            raise UsageError("--n needs a square base; use --h for <%d,%d,%d>" % dims)
        h = _log(n, n0)
        if h is None:
            raise UsageError("n = %d is not a power of the base dimension %d" % (n, n0))
        return h
    return 2 if cfg.h is None else cfg.h


def _emit(rows, cfg, columns=None):
    if cfg.format == "csv":
        text = "# %s\n" % SCHEMA + reports_to_csv(rows, columns)
    else:
        text = format_table(rows, columns) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _fmt(v):
    if isinstance(v, float):
        return "%.6g" % v
    if hasattr(v, "denominator"):
        return fmt_scalar(v)
    return v


# validate


def cmd_validate(cfg):
    kind, obj = _load_unvalidated(cfg.fixture)
    if kind == "algorithm":
        rep = validate_algorithm(obj)
        ok, what, msg = rep.ok, "brent", rep.message
    else:
        rep = validate_decomposition(obj)
        ok, what, msg = rep.ok, rep.identity or "all", rep.message
        if rep.row is not None:
            msg += " (row %d)" % (rep.row + 1)
    rows = [{"fixture": cfg.fixture, "kind": kind, "status": "PASS" if ok else "FAIL",
             "identity": "" if ok else what, "message": msg}]
    _emit(rows, cfg)
    return 0 if ok else 1


def _load_unvalidated(spec):
    if spec.startswith("builtin:"):
        return _load(spec)
    path = spec
    if not os.path.exists(path):
        for alt in (os.path.join(F.fixture_dir(), spec), os.path.join(F.fixture_dir(), spec + ".algdec")):
            if os.path.exists(alt):
                path = alt
                break
        else:
            raise UsageError("fixture %r not found (looked in . and %s)" % (spec, F.fixture_dir()))
    return "decomposition", load_decomposition(path, validate=False)


# count


ALG_ENGINES = ("naive", "recursive")
DEC_ENGINES = ("recursive", "ab", "ac", "bc", "dc", "cc", "bc-star", "cc-star")


def _count_one(kind, obj, engine, cfg, rng, M):
    mode = cfg.mode
    alg = obj if kind == "algorithm" else obj.alg
    n0, m0, k0 = alg.dims
    row = {"engine": engine, "M": M if engine in ("cc", "cc-star") else ""}
    mach = Machine(mode)
    if engine in ("ac", "bc", "dc", "cc"):
        cp = derive_cost_parameters(obj)
        h = 0 if engine == "ac" else _levels(cfg, alg.dims)
        x = cfg.x
        S = BlockVector([_rand(rng, n0 ** h, m0 ** h, mode) for _ in range(obj.p11 ** x)])
        T = BlockVector([_rand(rng, m0 ** h, k0 ** h, mode) for _ in range(obj.p11b ** x)])
        if engine == "ac":
            E.ac(obj, S, T, mach)
            pred = P.T_x(cp, x)
        elif engine == "bc":
            E.bc(obj, S, T, mach)
            pred = P.T_hx(cp, h, x)
        elif engine == "dc":
            E.dc(obj, S, T, mach)
            pred = P.B_hx(cp, h, x)
        else:
            E.cc(obj, S, T, M, mach, cp)
            pred = P.C_hx(cp, h, x, M)
        row.update(h=h, x=x)
    else:
        h = _levels(cfg, alg.dims)
        n, m, k = n0 ** h, m0 ** h, k0 ** h
        A = _rand(rng, n, m, mode)
        B = _rand(rng, m, k, mode)
        row.update(h=h, x="")
        if engine == "naive":
            a = mach.adopt(A.reshape((1,) + A.shape), "A")
            b = mach.adopt(B.reshape((1,) + B.shape), "B")
            c = mach.new((1, n, k), "C")
            mach.classical(c, a, b)
            pred = n * k * (m - 1) + n * m * k
        elif engine == "recursive":
            recursive_multiply(alg, A, B, 1, mach)
            pred = sum(P.recursive_counts(alg, n, m, k))
        elif engine == "ab":
            E.ab(obj, A, B, 1, mach)
            talg = obj.basis.transform_algorithm(alg) if not obj.basis.is_identity else alg
            pred = sum(P.recursive_counts(talg, n, m, k)) + P.star_basis_ops(obj, n, m, k)
        elif engine == "bc-star":
            cp = derive_cost_parameters(obj)
            E.bc_star(obj, A, B, mach)
            pred = P.T_hx(cp, h, 0) + P.star_basis_ops(obj, n, m, k)
        elif engine == "cc-star":
            cp = derive_cost_parameters(obj)
            E.cc_star(obj, A, B, M, mach, cp=cp)
            pred = P.C_hx(cp, h, 0, M) + P.star_basis_ops(obj, n, m, k)
        else:
            raise UsageError("engine %r does not apply here" % engine)
    rep = mach.report()
    row.update(additions=rep.additions, scalar_mults=rep.scalar_multiplications,
               element_mults=rep.element_multiplications, measured=rep.arithmetic,
               predicted=pred, status="MATCH" if rep.arithmetic == pred else "MISMATCH")
    return row


def cmd_count(cfg):
    kind, obj = _load(cfg.fixture)
    allowed = ALG_ENGINES if kind == "algorithm" else DEC_ENGINES
    engines = [cfg.engine] if cfg.engine else list(allowed)
    for e in engines:
        if e not in allowed:
            raise UsageError("engine %r needs a %s fixture" %
                             (e, "decomposition" if kind == "algorithm" else "bilinear-algorithm"))
    rows = []
    rng = np.random.default_rng(cfg.seed)
    for e in engines:
        if e in ("cc", "cc-star"):
            Ms = cfg.M or [_default_M(obj)]
            for M in Ms:
                try:
                    rows.append(_count_one(kind, obj, e, cfg, rng, M))
                except ValueError as err:
                    raise UsageError(str(err))
        else:
            rows.append(_count_one(kind, obj, e, cfg, rng, None))
    cols = ["engine", "h", "x", "M", "additions", "scalar_mults", "element_mults",
            "measured", "predicted", "status"]
    _emit(rows, cfg, cols)
    return 0 if all(r["status"] == "MATCH" for r in rows) else 1


def _default_M(d):
    cp = derive_cost_parameters(d)
    return int(math.ceil(P.Z(cp, 1, 0)))


# iosim


def cmd_iosim(cfg):
    kind, obj = _load(cfg.fixture)
    engine = cfg.engine or ("recursive" if kind == "algorithm" else "bc")
    Ms = cfg.M or [256]
    rng = np.random.default_rng(cfg.seed)
    rows = []
    ok = True
    if engine in ("naive", "recursive"):
        alg = obj if kind == "algorithm" else obj.alg
        n0 = alg.n0
        sizes = cfg.n or [n0 ** _levels(cfg, alg.dims)]
        for n in sizes:
            if not (alg.n0 == alg.m0 == alg.k0 and _is_power(n, n0)):
                raise UsageError("n = %d is not a power of %d" % (n, n0))
        totals = {M: [] for M in Ms}
        for n in sizes:
            A = _rand(rng, n, n, "float")
            B = _rand(rng, n, n, "float")
            _, res, _ = traced_run(engine, alg, A, B, Ms, cfg.line, keep=False)
            prev = None
            for M, r in zip(Ms, res):
                mono = prev is None or r.total <= prev
                ok &= mono
                prev = r.total
                totals[M].append(r.total)
                rows.append({"engine": engine, "n": n, "h": "", "x": "", "M": M, "line": cfg.line,
                             "loads": r.loads, "writebacks": r.writebacks, "total": r.total,
                             "bound": "", "bound_value": "", "ratio": "", "applies": "",
                             "monotone": "yes" if mono else "NO"})
        if len(sizes) >= 3:
            for M in Ms:
                slope, _ = fit_exponent(sizes, totals[M])
                rows.append({"engine": engine + " fit", "n": ",".join(map(str, sizes)), "M": M,
                             "line": cfg.line, "total": "", "bound": "exponent",
                             "bound_value": "%.4f" % slope})
    elif engine in ("bc", "dc", "cc"):
        if kind != "decomposition":
            raise UsageError("engine %r needs a decomposition fixture" % engine)
        cp = derive_cost_parameters(obj)
        n0, m0, k0 = obj.dims
        h = _levels(cfg, obj.dims)
        x = cfg.x
        S = BlockVector([_rand(rng, n0 ** h, m0 ** h, "float") for _ in range(obj.p11 ** x)])
        T = BlockVector([_rand(rng, m0 ** h, k0 ** h, "float") for _ in range(obj.p11b ** x)])
        if engine == "cc":
            results = []
            for M in Ms:
                if M < P.Z(cp, 0, 0):
                    raise UsageError("M = %d is below Z(0,0) = %s; cc cannot run" % (M, fmt_scalar(P.Z(cp, 0, 0))))
                _, res, _ = traced_instance("cc", obj, S, T, [M], cfg.line, M_engine=M)
                results.append(res[0])
        else:
            _, results, _ = traced_instance(engine, obj, S, T, Ms, cfg.line)
        prev = None
        for M, r in zip(Ms, results):
            mono = True
            if engine != "cc":
                mono = prev is None or r.total <= prev
                prev = r.total
            if engine == "bc":
                bound, name = P.R_hx(cp, h, x, M), "R(h,x)"
                applies = P.Z(cp, h, x) > M
            elif engine == "cc":
                bound, name = P.Mprime_hx(cp, h, x, M), "M'(h,x)"
                applies = True
            else:
                bound, name, applies = None, "", False
            ratio = r.total / bound if bound and bound > 0 else None
            if applies and (bound is None or r.total > bound):
                ok = False
            ok &= mono
            rows.append({"engine": engine, "n": "", "h": h, "x": x, "M": M, "line": cfg.line,
                         "loads": r.loads, "writebacks": r.writebacks, "total": r.total,
                         "bound": name, "bound_value": _fmt(float(bound)) if bound is not None else "",
                         "ratio": _fmt(ratio) if ratio is not None else "",
                         "applies": "yes" if applies else "no (fits in M)" if engine == "bc" else "",
                         "monotone": "yes" if mono else "NO"})
    else:
        raise UsageError("iosim supports naive, recursive, bc, dc and cc")
    cols = ["engine", "n", "h", "x", "M", "line", "loads", "writebacks", "total", "bound",
            "bound_value", "ratio", "applies", "monotone"]
    _emit(rows, cfg, cols)
    return 0 if ok else 1


# predict


def _algorithm_predictions(alg, cfg):
    rows = []
    n0, m0, k0 = alg.dims
    h = _levels(cfg, alg.dims)
    n, m, k = n0 ** h, m0 ** h, k0 ** h
    lin, mul = P.recursive_counts(alg, n, m, k)
    rows.append({"quantity": "recursive arithmetic", "args": "n=%d,%d,%d" % (n, m, k),
                 "value": lin + mul, "source": "recurrence"})
    try:
        c = P.recursive_leading_coefficient(alg)
        rows.append({"quantity": "recursive leading coefficient",
                     "args": "n^log_%d(%d)" % (n0, alg.t), "value": _fmt(c), "source": "closed form"})
    except (ValueError, P.FormulaPole) as e:
        rows.append({"quantity": "recursive leading coefficient", "args": "", "value": "n/a: %s" % e,
                     "source": ""})
    return rows


def _decomposition_predictions(d, cfg):
    cp = derive_cost_parameters(d)
    h = _levels(cfg, d.dims)
    x = cfg.x
    n0, m0, k0 = d.dims
    rows = []

    def add(q, args, v, src="closed form"):
        rows.append({"quantity": q, "args": args, "value": _fmt(v), "source": src})

    hx = "h=%d,x=%d" % (h, x)
    add("T(x)  [ac]", "x=%d" % x, P.T_x(cp, x))
    add("T(h,x)  [bc]", hx, P.T_hx(cp, h, x))
    add("B(h,x)  [dc]", hx, P.B_hx(cp, h, x))
    add("Z(h,x)  [bc memory]", hx, P.Z(cp, h, x))
    try:
        add("bc leading coefficient", "n^log_%d(%d)" % (n0, d.t) if n0 == m0 == k0 else "t^h",
            P.leading_coefficient_bc(cp))
    except P.FormulaPole as e:
        add("bc leading coefficient", "", "pole: %s" % e)
    square = n0 == m0 == k0
    for M in cfg.M:
        mm = "M=%d" % M
        add("C(h,x)  [cc]", hx + "," + mm, P.C_hx(cp, h, x, M))
        add("switch level", mm, P.switch_level(cp, M))
        add("h'", mm, P.h_prime(cp, M))
        add("x'", mm, P.x_prime(cp, M))
        add("M(x)", "x=%d,%s" % (x, mm), P.M_x(cp, M, x))
        add("M'(h,x)  [cc IO]", hx + "," + mm, P.Mprime_hx(cp, h, x, M))
        add("R(h,x)  [bc IO]", hx + "," + mm, P.R_hx(cp, h, x, M))
        try:
            add("cc leading coefficient", mm, P.leading_coefficient_cc(cp, P.h_prime(cp, M)))
        except P.FormulaPole as e:
            add("cc leading coefficient", mm, "pole: %s" % e)
        if square:
            n = n0 ** h
            try:
                add("closed bc IO bound", "n=%d,%s" % (n, mm), P.cor4_bound(cp, M, n, n0))
            except (ValueError, ZeroDivisionError) as e:
                add("closed bc IO bound", "n=%d,%s" % (n, mm), "n/a: %s" % e)
    if square:
        try:
            c, ne, me = P.io_leading_bc(cp, n0)
            add("bc IO leading term", "c n^%.4f M^%.4f" % (ne, me), c)
        except (ValueError, ZeroDivisionError) as e:
            add("bc IO leading term", "", "n/a: %s" % e)
        try:
            c, ne, me = P.io_leading_cc(cp, n0)
            add("cc IO leading term", "c n^%.4f M^%.4f" % (ne, me), c)
        except (ValueError, ZeroDivisionError) as e:
            add("cc IO leading term", "", "n/a: %s" % e)
    if not d.basis.is_identity:
        from .linalg import op_count
        for k_, (e, dims) in enumerate(zip((d.basis.eta[0], d.basis.eta[1], d.basis.output_map()),
                                           ((n0, m0), (m0, k0), (n0, k0)))):
            q = sum(op_count(e))
            rows_, cols_ = dims[0] ** h, dims[1] ** h
            add("basis %d ops" % (k_ + 1), "q=%d,%dx%d" % (q, rows_, cols_),
                P.basis_cost_blocks(q, rows_, cols_, *dims))
    return rows


def _reference_rows(dims_t):
    out = []
    for src, name, dims, cx, mono, coef in PAPER_REFERENCE:
        if dims == dims_t:
            out.append({"quantity": "%s %s leading coefficient" % (name, cx), "args": mono,
                        "value": coef, "source": src})
    return out


def cmd_predict(cfg):
    kind, obj = _load(cfg.fixture)
    if kind == "algorithm":
        rows = _algorithm_predictions(obj, cfg)
        alg = obj
    else:
        rows = _algorithm_predictions(obj.alg, cfg) + _decomposition_predictions(obj, cfg)
        alg = obj.alg
    rows += _reference_rows("%d,%d,%d;%d" % (alg.n0, alg.m0, alg.k0, alg.t))
    _emit(rows, cfg, ["quantity", "args", "value", "source"])
    return 0


# table


def _monomial(alg):
    n0, m0, k0 = alg.dims
    if n0 == m0 == k0:
        return "n^log_%d(%d)" % (n0, alg.t)
    return "n^(3 log_%d(%d))" % (n0 * m0 * k0, alg.t)


def _table_rows_algorithm(name, alg, cfg, rng):
    rows = []
    n0, m0, k0 = alg.dims
    h = _levels(cfg, alg.dims) if (cfg.n and n0 == m0 == k0) or not cfg.n else cfg.h or 2
    n, m, k = n0 ** h, m0 ** h, k0 ** h
    A = _rand(rng, n, m, cfg.mode)
    B = _rand(rng, m, k, cfg.mode)
    mach = Machine(cfg.mode)
    recursive_multiply(alg, A, B, 1, mach)
    try:
        lead = _fmt(P.recursive_leading_coefficient(alg))
    except (ValueError, P.FormulaPole):
        lead = "n/a"
    pred = sum(P.recursive_counts(alg, n, m, k))
    rows.append({"fixture": name, "engine": "recursive", "monomial": _monomial(alg), "size": "%dx%dx%d" % (n, m, k),
                 "arith_lead": lead, "measured": mach.report().arithmetic, "predicted": pred,
                 "io_lead": "", "status": "MATCH" if mach.report().arithmetic == pred else "MISMATCH",
                 "paper_ref": ""})
    return rows


def _table_rows_decomposition(name, d, cfg, rng):
    rows = _table_rows_algorithm(name, d.alg, cfg, rng)
    cp = derive_cost_parameters(d)
    n0, m0, k0 = d.dims
    h = _levels(cfg, d.dims) if n0 == m0 == k0 or not cfg.n else (cfg.h or 2)
    n, m, k = n0 ** h, m0 ** h, k0 ** h
    A = _rand(rng, n, m, cfg.mode)
    B = _rand(rng, m, k, cfg.mode)
    size = "%dx%dx%d" % (n, m, k)
    bops = P.star_basis_ops(d, n, m, k)
    if not d.basis.is_identity:
        mach = Machine(cfg.mode)
        E.ab(d, A, B, 1, mach)
        talg = d.basis.transform_algorithm(d.alg)
        try:
            lead = _fmt(P.recursive_leading_coefficient(talg))
        except (ValueError, P.FormulaPole):
            lead = "n/a"
        pred = sum(P.recursive_counts(talg, n, m, k)) + bops
        got = mach.report().arithmetic
        rows.append({"fixture": name, "engine": "ab", "monomial": _monomial(d.alg), "size": size,
                     "arith_lead": lead, "measured": got, "predicted": pred, "io_lead": "",
                     "status": "MATCH" if got == pred else "MISMATCH", "paper_ref": ""})
    square = n0 == m0 == k0
    try:
        lead = _fmt(P.leading_coefficient_bc(cp))
    except P.FormulaPole:
        lead = "pole"
    io = ""
    if square:
        try:
            c, ne, me = P.io_leading_bc(cp, n0)
            io = "%.4g n^%.3f M^%.3f" % (c, ne, me)
        except (ValueError, ZeroDivisionError):
            io = "n/a"
    mach = Machine(cfg.mode)
    E.bc_star(d, A, B, mach)
    got = mach.report().arithmetic
    pred = P.T_hx(cp, h, 0) + bops
    rows.append({"fixture": name, "engine": "bc-star", "monomial": _monomial(d.alg), "size": size,
                 "arith_lead": lead, "measured": got, "predicted": pred, "io_lead": io,
                 "status": "MATCH" if got == pred else "MISMATCH", "paper_ref": ""})
    for M in cfg.M or [_default_M(d)]:
        if M < P.Z(cp, 0, 0):
            continue
        try:
            lead = _fmt(P.leading_coefficient_cc(cp, P.h_prime(cp, M)))
        except P.FormulaPole:
            lead = "pole"
        io = ""
        if square:
            c, ne, me = P.io_leading_cc(cp, n0)
            io = "%.4g n^%.3f M^%.3f" % (c, ne, me)
        mach = Machine(cfg.mode)
        E.cc_star(d, A, B, M, mach, cp=cp)
        got = mach.report().arithmetic
        pred = P.C_hx(cp, h, 0, M) + bops
        rows.append({"fixture": name, "engine": "cc-star M=%d" % M, "monomial": _monomial(d.alg),
                     "size": size, "arith_lead": lead, "measured": got, "predicted": pred,
                     "io_lead": io, "status": "MATCH" if got == pred else "MISMATCH", "paper_ref": ""})
    return rows


def cmd_table(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    seen_dims = set()
    for name in ("strassen", "naive222"):
        alg = F.ALGORITHMS[name]()
        rows += _table_rows_algorithm("builtin:" + name, alg, cfg, rng)
    sources = [("builtin:" + n, F.DECOMPOSITIONS[n]) for n in F.SYNTHETIC]
    sources += [(os.path.basename(p), p) for p in F.available_files()
                if os.path.splitext(os.path.basename(p))[0] not in F.SYNTHETIC]
    failed = False
    for label, src in sources:
        try:
            d = src() if callable(src) else load_decomposition(src)
        except (ParseError, DecompositionError, ShapeError) as e:
            rows.append({"fixture": label, "engine": "", "status": "INVALID: %s" % e})
            failed = True
            continue
        seen_dims.add("%d,%d,%d;%d" % (d.alg.n0, d.alg.m0, d.alg.k0, d.t))
        try:
            rows += _table_rows_decomposition(label, d, cfg, rng)
        except (ValueError, DecompositionError) as e:
            rows.append({"fixture": label, "engine": "", "status": "SKIPPED: %s" % e})
    for src, name, dims, cx, mono, coef in PAPER_REFERENCE:
        rows.append({"fixture": "<%s>" % dims, "engine": name, "monomial": mono,
                     "status": "DATA-REQUIRED" if dims not in seen_dims else "reference",
                     "arith_lead": "", "io_lead": "", "measured": "", "predicted": "",
                     "paper_ref": "%s: %s %s" % (src, cx, coef)})
    if any(r.get("status") == "MISMATCH" for r in rows):
        failed = True
    cols = ["fixture", "engine", "monomial", "size", "arith_lead", "measured", "predicted",
            "io_lead", "status", "paper_ref"]
    _emit(rows, cfg, cols)
    return 1 if failed else 0


# entry point


COMMANDS = {
    "validate": cmd_validate,
    "count": cmd_count,
    "iosim": cmd_iosim,
    "predict": cmd_predict,
    "table": cmd_table,
}


def build_parser():
    p = argparse.ArgumentParser(prog="mmlab", description="fast matrix multiplication lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--fixture", required=name != "table",
                       help="builtin:NAME, a .algdec path, or a file in $MMLAB_FIXTURES")
        s.add_argument("--engine", choices=E.ENGINES)
        s.add_argument("--n", type=_int_list, default=[], help="matrix side(s), comma separated")
        s.add_argument("--h", type=int, help="recursion levels (default 2)")
        s.add_argument("--x", type=int, default=0, help="vector depth of the instance")
        s.add_argument("--M", type=_int_list, default=[], help="fast-memory sizes, ascending")
        s.add_argument("--line", type=int, default=1)
        s.add_argument("--mode", choices=("exact", "float"), default="exact")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "table"), default="table")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = ExperimentConfig(args.command, args.fixture, args.engine, args.n, args.h, args.x,
                           args.M, args.line, args.mode, args.seed, args.out, args.format)
    try:
        cfg.check()
        return COMMANDS[cfg.command](cfg)
    except UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 2
    except (ParseError, DecompositionError) as e:
        print("invalid fixture: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
