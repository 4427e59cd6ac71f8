"""Acceptance criteria, one test each.  Every test records a single
PASS/FAIL line (printed in the terminal summary) before asserting."""
import math
import time

import numpy as np
import pytest

from mmlab import fixtures as F, engines as E, predict as P
from mmlab.bilinear import (strassen, naive_algorithm, validate_algorithm, recursive_multiply,
                            ab_multiply, BasisTriple, basis_transform)
from mmlab.cachesim import traced_instance, io_scaling_probe
from mmlab.counters import Machine
from mmlab.decomposition import derive_cost_parameters, load_decomposition, validate_decomposition
from mmlab.identities import run_identity_checks
from mmlab.linalg import BlockVector, mat_equal, naive_multiply, op_count, matrix

import conftest
from helpers import rand_int, rand_instance, instance_oracle, m_values, single_entry_mutations

SYNTH = [F.DECOMPOSITIONS[n]() for n in F.SYNTHETIC]


def record(n, ok, detail):
    conftest.ACCEPTANCE.append("criterion %d: %s  %s" % (n, "PASS" if ok else "FAIL", detail))
    print(conftest.ACCEPTANCE[-1])
    assert ok, detail


def _batch(rng, L, r, m, c):
    return (np.array([rand_int(rng, r, m) for _ in range(L)]),
            np.array([rand_int(rng, m, c) for _ in range(L)]))


def test_c01_correctness_oracle():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    L = 20
    bad = []
    runs = 0
    for alg in (strassen(), naive_algorithm(2, 2, 2)):
        ident = BasisTriple.identity(alg)
        for e in range(1, 7):
            n = 2 ** e
            A, B = _batch(rng, L, n, n, n)
            ref = [naive_multiply(A[l], B[l]) for l in range(L)]
            for name, C in (("recursive", recursive_multiply(alg, A, B)),
                            ("ab", ab_multiply(alg, ident, A, B))):
                runs += L
                if not all(mat_equal(C[l], ref[l]) for l in range(L)):
                    bad.append((alg.name, name, n))
    for d in SYNTH:
        n0, m0, k0 = d.dims
        cp = derive_cost_parameters(d)
        M = math.ceil(P.Z(cp, 1, 0))
        for h in range(1, 4):
            A, B = _batch(rng, L, n0 ** h, m0 ** h, k0 ** h)
            ref = [naive_multiply(A[l], B[l]) for l in range(L)]
            full = {"recursive": recursive_multiply(d.alg, A, B), "ab": ab_multiply(d.alg, d.basis, A, B),
                    "bc*": [E.bc_star(d, A[l], B[l]) for l in range(L)],
                    "cc*": [E.cc_star(d, A[l], B[l], M, cp=cp) for l in range(L)]}
            for name, C in full.items():
                runs += L
                if not all(mat_equal(C[l], ref[l]) for l in range(L)):
                    bad.append((d.name, name, h))
            # the plain engines work in transformed coordinates: compare with
            # the naive product carried into them
            for l in range(L):
                S, T = BlockVector([A[l]]), BlockVector([B[l]])
                want = instance_oracle(d, S, T, 0)
                for name, fn in (("bc", lambda: E.bc(d, S, T)), ("dc", lambda: E.dc(d, S, T)),
                                 ("cc", lambda: E.cc(d, S, T, M, cp=cp))):
                    if name != "dc" and h == 3:
                        continue        # bc* / cc* above already ran these at h = 3
                    runs += 1
                    if not mat_equal(fn()[0], want[0]):
                        bad.append((d.name, name, h))
        for x in range(1, 4):
            for _ in range(L):
                S, T = rand_instance(rng, d, 0, x)
                runs += 1
                if E.ac(d, S, T) != BlockVector(instance_oracle(d, S, T, x)):
                    bad.append((d.name, "ac", x))
    dt = time.time() - t0
    record(1, not bad and dt < 120, "%d exact runs, %d mismatches %s, %.0f s (limit 120 s)"
           % (runs, len(bad), sorted(set(bad))[:3], dt))


def test_c02_block_map_identities():
    t0 = time.time()
    res = run_identity_checks(trials=100, seed=2024)
    dt = time.time() - t0
    ok = all(p == n for p, n in res.values()) and dt < 60
    record(2, ok, "%s, %.1f s (limit 60 s)" % (", ".join("%s %d/%d" % (k, *v) for k, v in res.items()), dt))


def test_c03_brent_validation():
    base = validate_algorithm(strassen())
    located = 0
    for _, bad in single_entry_mutations(strassen(), 10, seed=2024):
        rep = validate_algorithm(bad)
        if not rep.ok and rep.violation is not None and len(rep.violation) == 6:
            located += 1
    record(3, base.ok and located == 10, "strassen %s; %d/10 mutations rejected with a located index tuple"
           % ("passes" if base.ok else "FAILS", located))


@pytest.fixture(scope="module")
def grid_runs():
    """Instrumented ac/bc/dc/cc over h <= 3, x <= 2 and three M values on F1-F3."""
    rng = np.random.default_rng(7)
    rows = []
    for d in SYNTH:
        cp = derive_cost_parameters(d)
        Ms = m_values(cp)
        for x in range(3):
            S, T = rand_instance(rng, d, 0, x, exact=False)
            m = Machine("float")
            E.ac(d, S, T, m)
            rows.append((d.name, "ac", 0, x, None, m, P.T_x(cp, x), P.ac_memory_bound(cp, x)))
        for h in range(4):
            for x in range(3):
                S, T = rand_instance(rng, d, h, x, exact=False)
                m = Machine("float")
                E.bc(d, S, T, m)
                rows.append((d.name, "bc", h, x, None, m, P.T_hx(cp, h, x), P.Z(cp, h, x)))
                m = Machine("float")
                E.dc(d, S, T, m)
                rows.append((d.name, "dc", h, x, None, m, P.B_hx(cp, h, x), None))
                for M in Ms:
                    m = Machine("float")
                    E.cc(d, S, T, M, m, cp)
                    rows.append((d.name, "cc", h, x, M, m, P.C_hx(cp, h, x, M), None))
    return rows


def test_c04_counts_equal_predictors(grid_runs):
    bad = [(r[0], r[1], r[2], r[3], r[4], r[5].report().arithmetic, r[6]) for r in grid_runs
           if r[5].report().arithmetic != r[6]]
    record(4, not bad, "%d instrumented runs (ac/bc/dc/cc, h<=3, x<=2, 3 M values, F1-F3), "
           "%d count mismatches %s" % (len(grid_runs), len(bad), bad[:3]))


def test_c05_strassen_closed_form():
    bad = []
    for k in range(7):
        n = 2 ** k
        m = Machine("float")
        recursive_multiply(strassen(), np.ones((n, n)), np.ones((n, n)), machine=m)
        if (m.adds, m.smults, m.emults) != (6 * (7 ** k - 4 ** k), 0, 7 ** k):
            bad.append((k, m.adds, m.emults))
    record(5, not bad, "adds = 6(7^k - 4^k), mults = 7^k for k = 0..6; mismatches %s" % bad)


def test_c06_memory_bounds(grid_runs):
    bad = []
    n = 0
    for name, eng, h, x, M, m, _, bound in grid_runs:
        if eng not in ("ac", "bc"):
            continue
        n += 1
        extra = m.report().peak_extra_words
        # bc's bound counts the instance's own words too, so check the full peak
        used = extra if eng == "ac" else m.report().peak_words
        if used > bound:
            bad.append((name, eng, h, x, used, float(bound)))
    record(6, not bad, "%d ac/bc runs within their memory bounds; violations %s" % (n, bad[:3]))


def test_c07_io_bounds():
    rng = np.random.default_rng(11)
    checked = 0
    skipped = 0
    bad = []
    nonmono = []
    for d in SYNTH:
        cp = derive_cost_parameters(d)
        Ms = m_values(cp)
        for h in range(4):
            for x in range(3):
                S, T = rand_instance(rng, d, h, x, exact=False)
                _, res, _ = traced_instance("bc", d, S, T, Ms)
                tot = [r.total for r in res]
                if any(a < b for a, b in zip(tot, tot[1:])):
                    nonmono.append((d.name, "bc", h, x, tot))
                for M, r in zip(Ms, res):
                    if P.Z(cp, h, x) > M:
                        checked += 1
                        if r.total > P.R_hx(cp, h, x, M):
                            bad.append((d.name, "bc", h, x, M, r.total, P.R_hx(cp, h, x, M)))
                    else:
                        skipped += 1
                cc_tot = []
                for M in Ms:
                    _, rc, _ = traced_instance("cc", d, S, T, [M], M_engine=M)
                    cc_tot.append(rc[0].total)
                    checked += 1
                    if rc[0].total > P.Mprime_hx(cp, h, x, M):
                        bad.append((d.name, "cc", h, x, M, rc[0].total, P.Mprime_hx(cp, h, x, M)))
                _, rc, _ = traced_instance("cc", d, S, T, Ms, M_engine=Ms[0])
                t2 = [r.total for r in rc]
                if any(a < b for a, b in zip(t2, t2[1:])):
                    nonmono.append((d.name, "cc", h, x, t2))
    record(7, not bad and not nonmono,
           "%d bound checks (bc vs R where Z(h,x) > M, %d in-memory points skipped; cc vs M' everywhere), "
           "%d violations %s; %d non-monotone LRU sweeps" % (checked, skipped, len(bad), bad[:2], len(nonmono)))


def test_c08_predictor_self_consistency():
    rec_bad = []
    ineq_bad = []
    n_ineq = 0
    for d in SYNTH + [F.fixture_dense()]:
        cp = derive_cost_parameters(d)
        Ms = m_values(cp) + [math.ceil(P.Z(cp, 3, 0))]
        for h in range(7):
            for x in range(5):
                if P.T_hx(cp, h, x) != P.T_hx_rec(cp, h, x) or P.B_hx(cp, h, x) != P.B_hx_rec(cp, h, x):
                    rec_bad.append((d.name, h, x))
                for M in Ms:
                    if h == 0:
                        continue
                    n_ineq += 1
                    R = P.R_hx(cp, h, x, M)
                    rhs = ((cp.t - cp.p1) * P.R_hx(cp, h - 1, x, M) + P.R_hx(cp, h - 1, x + 1, M)
                           + 3 * sum(cp.l2[i] * cp.l3[i] ** x * cp.l4[i] ** (h - 1) for i in range(3)))
                    # R is real valued; allow float rounding only
                    if R - rhs < -1e-9 * abs(R):
                        ineq_bad.append((d.name, h, x, M, R - rhs))
    record(8, not rec_bad and not ineq_bad,
           "T(h,x) and B(h,x) recurrences exact on h<=6, x<=4 (%d mismatches); R recurrence "
           "inequality on %d points (%d violations)" % (len(rec_bad), n_ineq, len(ineq_bad)))


def test_c09_scaling_probe():
    t0 = time.time()
    sizes = [32, 64, 128]
    rec = io_scaling_probe("recursive", strassen(), sizes, 256)
    nav = io_scaling_probe("naive", naive_algorithm(2, 2, 2), sizes, 256)
    dt = time.time() - t0
    w0 = math.log2(7)
    ok = abs(rec["exponent"] - w0) <= 0.15 and abs(nav["exponent"] - 3) <= 0.15 and dt < 180
    record(9, ok, "recursive Strassen exponent %.3f (target %.3f +- 0.15), naive %.3f (target 3 +- 0.15), "
           "totals %s / %s, %.0f s" % (rec["exponent"], w0, nav["exponent"], rec["totals"], nav["totals"], dt))


def test_c10_basis_costs():
    rng = np.random.default_rng(5)
    bad = []
    n_runs = 0
    for n0 in (2, 3):
        for _ in range(3):
            while True:
                eta = matrix(rng.integers(-2, 3, (n0 * n0, n0 * n0)).tolist())
                try:
                    BasisTriple(eta, eta, eta)
                    break
                except ZeroDivisionError:
                    continue
            q = sum(op_count(eta))
            for e in range(1, 4):
                n = n0 ** e
                A = matrix(rng.integers(-5, 6, (n, n)).tolist())
                m = Machine()
                basis_transform(eta, A, (n0, n0), m)
                n_runs += 1
                want = P.basis_cost(q, n, n0)[0]
                if m.adds + m.smults != want or want != q * n * n * e / (n0 * n0):
                    bad.append((n0, n, m.adds + m.smults, want))
    record(10, not bad, "%d random invertible eta runs (n0 = 2, 3; n up to n0^3) equal q/n0^2 n^2 log n; "
           "mismatches %s" % (n_runs, bad))


def _external_333():
    for p in F.available_files():
        try:
            d = load_decomposition(p)
        except Exception:
            continue
        if d.dims == (3, 3, 3) and d.t == 23:
            return p, d
    return None, None


def test_c11_conditional_reference_reproduction():
    path, d = _external_333()
    if d is None:
        conftest.ACCEPTANCE.append("criterion 11: SKIP  no <3,3,3;23> decomposition file in the fixture "
                                   "directory (data-dependent, excluded from the default suite)")
        pytest.skip("needs the external <3,3,3;23> decomposition file")
    cp = derive_cost_parameters(d)
    arith = float(P.leading_coefficient_bc(cp))
    coef, en, eM = P.io_leading_cc(cp, 3)
    ok = (abs(arith - 2) <= 0.02 and abs(coef - 14) <= 0.14
          and abs(en - math.log(23, 3)) < 1e-9 and abs(eM + 0.5) <= 0.005)
    record(11, ok, "%s: arithmetic leading coefficient %.4f (paper Table 1: 2), IO leading term "
           "%.3f n^%.4f M^%.4f (paper Table 1: 14 n^log3(23) M^-0.5)" % (path, arith, coef, en, eM))
