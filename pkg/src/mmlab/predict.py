"""Closed-form cost predictors for the decomposition engines.

Integer-valued ones (T, B, C, basis cost) are exact and are compared with
counters by equality.  The IO bounds use real exponents and are evaluated in
floats.  Everything takes a CostParameters `cp` (see decomposition.py).
"""
import math
from fractions import Fraction

I3 = range(3)


def _l(cp, i, j):
    return (cp.l1, cp.l2, cp.l3, cp.l4)[j - 1][i]


# arithmetic


def T_x(cp, x):
    """ac on an x-instance."""
    p1 = cp.p1
    out = p1 ** x
    for i in I3:
        l1, l3 = cp.l1[i], cp.l3[i]
        out += l1 * sum(l3 ** (x - 1 - j) * p1 ** j for j in range(x))
    return out


def T_x_rec(cp, x):
    if x == 0:
        return 1
    return cp.p1 * T_x_rec(cp, x - 1) + sum(cp.l1[i] * cp.l3[i] ** (x - 1) for i in I3)


def P1(cp, h, x):
    return cp.t ** h * T_x(cp, x)


def P2(cp, h, x):
    t, p1 = cp.t, cp.p1
    return sum(cp.l1[i] * cp.l3[i] ** x *
               sum(t ** j * (t - p1 + cp.l3[i]) ** (h - 1 - j) for j in range(h)) for i in I3)


def P3(cp, h, x):
    t, p1 = cp.t, cp.p1
    return sum(cp.l2[i] * cp.l3[i] ** x *
               sum(cp.l4[i] ** j * (t - p1 + cp.l3[i]) ** (h - 1 - j) for j in range(h)) for i in I3)


def T_hx(cp, h, x):
    """bc on an (h, x)-instance."""
    return P1(cp, h, x) + P2(cp, h, x) + P3(cp, h, x)


def expansion_ops(cp, h, x):
    """Linear work of one expansion step on an (h, x)-instance, h >= 1."""
    return sum(cp.l2[i] * cp.l3[i] ** x * cp.l4[i] ** (h - 1) for i in I3)


def T_hx_rec(cp, h, x):
    if h == 0:
        return T_x(cp, x)
    return ((cp.t - cp.p1) * T_hx_rec(cp, h - 1, x) + T_hx_rec(cp, h - 1, x + 1)
            + expansion_ops(cp, h, x))


def B_hx(cp, h, x):
    """dc on an (h, x)-instance."""
    p1 = cp.p1
    out = p1 ** x * T_hx(cp, h, 0)
    for i in I3:
        out += cp.l1[i] * cp.l4[i] ** h * sum(cp.l3[i] ** (x - 1 - j) * p1 ** j for j in range(x))
    return out


def B_hx_rec(cp, h, x):
    if x == 0:
        return T_hx(cp, h, 0)
    return cp.p1 * B_hx_rec(cp, h, x - 1) + sum(
        cp.l1[i] * cp.l4[i] ** h * cp.l3[i] ** (x - 1) for i in I3)


# memory thresholds


def Z(cp, h, x):
    """Words within which bc runs an (h, x)-instance (inputs and output included)."""
    return sum((1 + cp.beta_i[i]) * cp.l4[i] ** h * cp.l3[i] ** x for i in I3)


def ac_memory_bound(cp, x):
    return sum(Fraction(cp.l3[i] ** (x + 1), cp.l3[i] - 1) for i in I3)


def cc_fits(cp, h, M):
    """cc hands an (h, x)-instance to dc when the (h, 0)-instances dc
    eventually gives to bc fit in M words."""
    return Z(cp, h, 0) <= M


def switch_level(cp, M, cap=256):
    """Largest h with cc_fits(h); -1 when even h = 0 does not fit."""
    h = -1
    while h + 1 <= cap and cc_fits(cp, h + 1, M):
        h += 1
    return h


def C_hx(cp, h, x, M):
    """cc on an (h, x)-instance with M words of fast memory."""
    hs = switch_level(cp, M)
    if hs < 0:
        raise ValueError("M = %s is below Z(0,0) = %s" % (M, Z(cp, 0, 0)))
    if h <= hs:
        return B_hx(cp, h, x)
    g = h - hs
    t, p1 = cp.t, cp.p1
    out = t ** g * B_hx(cp, hs, x)
    for i in I3:
        l4s = cp.l4[i] ** hs
        rho = t - p1 + cp.l3[i]
        out += l4s * cp.l1[i] * cp.l3[i] ** x * sum(t ** j * rho ** (g - 1 - j) for j in range(g))
        out += l4s * cp.l2[i] * cp.l3[i] ** x * sum(cp.l4[i] ** j * rho ** (g - 1 - j) for j in range(g))
    return out


def C_hx_rec(cp, h, x, M):
    if cc_fits(cp, h, M):
        return B_hx(cp, h, x)
    return ((cp.t - cp.p1) * C_hx_rec(cp, h - 1, x, M) + C_hx_rec(cp, h - 1, x + 1, M)
            + expansion_ops(cp, h, x))


# leading coefficients


class FormulaPole(ValueError):
    pass


def leading_coefficient_bc(cp):
    """Coefficient of t^h in T(h, 0)."""
    bad = [i + 1 for i in I3 if cp.p1 <= cp.l3[i]]
    if bad:
        raise FormulaPole("p1 = %d is not above ell_{i,3} for i in %s; the coefficient has a pole"
                          % (cp.p1, bad))
    return 1 + sum(Fraction(cp.l1[i], cp.p1 - cp.l3[i]) for i in I3)


def leading_coefficient_cc(cp, hprime):
    """Coefficient for cc with the switch at real level hprime."""
    leading_coefficient_bc(cp)
    t, p1 = cp.t, cp.p1
    out = 1.0
    # P3 at (h', 0) over t^h'; h' may be fractional, so use the geometric closed form
    for i in I3:
        rho = t - p1 + cp.l3[i]
        l4 = cp.l4[i]
        if rho != l4:
            s = (rho ** hprime - l4 ** hprime) / (rho - l4)
        else:
            s = hprime * rho ** (hprime - 1)
        out += cp.l2[i] * s / t ** hprime
        out += (1 - (rho / t) ** hprime + (l4 / t) ** hprime) * cp.l1[i] / (p1 - cp.l3[i])
    return out


def leading_limit_ratio(cp, h):
    """T(h, 0) / t^h, which tends to the bc leading coefficient."""
    return Fraction(T_hx(cp, h, 0), cp.t ** h)


# IO bounds (real valued)


def h_prime(cp, M):
    return (math.log(M) - math.log(float(cp.beta))) / math.log(cp.u0)


def x_prime(cp, M):
    r = cp.r
    return (math.log(M * (r - 1)) - math.log(3 * r)) / math.log(r)


def M_x(cp, M, x):
    xp = x_prime(cp, M)
    p1 = cp.p1
    if x < xp:
        return p1 ** (x - xp) * M
    out = p1 ** (x - xp) * M
    for i in I3:
        l3 = cp.l3[i]
        if p1 != l3:
            frac = (p1 ** (x - xp) - l3 ** (x - xp)) / (p1 - l3)
        else:
            frac = (x - xp) * p1 ** (x - xp - 1)
        out += 3 * cp.l1[i] * l3 ** xp * frac
    return out


def Mprime_x(cp, x, hs):
    """dc on an (hs, x)-instance, hs the switch level."""
    p1 = cp.p1
    out = p1 ** x * sum(cp.l4[i] ** hs for i in I3)
    for i in I3:
        out += 3 * cp.l1[i] * cp.l4[i] ** hs * sum(cp.l3[i] ** j * p1 ** (x - 1 - j) for j in range(x))
    return out


def Mprime_hx(cp, h, x, M):
    """cc on an (h, x)-instance; the switch level is the engine's own."""
    hs = switch_level(cp, M)
    if h <= hs:
        # dc directly: p1^x bc calls on (h, 0)-instances that fit
        return Mprime_x(cp, x, h)
    g = h - hs
    t, p1 = cp.t, cp.p1
    out = t ** g * Mprime_x(cp, x, hs)
    for i in I3:
        rho = t - p1 + cp.l3[i]
        out += 3 * cp.l3[i] ** x * cp.l4[i] ** hs * sum(
            rho ** (g - 1 - j) * (cp.l1[i] * t ** j + cp.l2[i] * cp.l4[i] ** j) for j in range(g))
    return out


def M1(cp, h, x):
    return 3 * P2(cp, h, x)


def M2(cp, h, x, M):
    xp = x_prime(cp, M)
    t, p1 = cp.t, cp.p1
    return 3 * sum(cp.l1[i] * cp.l3[i] ** x * (cp.l3[i] / p1) ** (xp - x) *
                   sum((t - p1 + cp.l3[i]) ** (h - 1 - j) * t ** j for j in range(h)) for i in I3)


def T_term(cp, i_idx, h, x, M):
    """T_i(h, x): the i-th summand of M3."""
    t, p1 = cp.t, cp.p1
    tp = t - p1
    k = i_idx - x
    if k < 0 or k > h:
        return 0.0
    out = 0.0
    small = Z(cp, 0, i_idx) < M
    hp = h_prime(cp, M) if small else None
    for i in I3:
        denom = tp + cp.l3[i] - cp.l4[i]
        v = 3 * cp.l2[i] * math.comb(h, k) * tp ** (h - k) / denom * cp.l3[i] ** i_idx
        if small:
            v *= (cp.l4[i] / tp) ** (hp - math.log(cp.r) / math.log(cp.u0) * i_idx)
        out += v
    return out


def M3(cp, h, x, M):
    tp = cp.t - cp.p1
    s = sum(T_term(cp, i, h, x, M) for i in range(x, h + x + 1))
    return s - 3 * sum(cp.l3[i] ** x * cp.l2[i] * cp.l4[i] ** h / (tp + cp.l3[i] - cp.l4[i])
                       for i in I3)


def R_hx(cp, h, x, M):
    """Upper bound on bc's IO for an (h, x)-instance that does not fit in M."""
    xp = x_prime(cp, M)
    base = cp.t ** h * M_x(cp, M, x)
    if x >= xp:
        return base + M1(cp, h, x) + M3(cp, h, x, M)
    return base + M2(cp, h, x, M) + M3(cp, h, x, M)


def cor4_bound(cp, M, n, t0):
    """Square-base closed bound on bc's IO for n x n inputs."""
    if not (cp.l4[0] == cp.l4[1] == cp.l4[2] == t0 * t0):
        raise ValueError("the closed bound needs a square base")
    t, p1, r = cp.t, cp.p1, cp.r
    lp = math.log(p1) / math.log(r)
    c = (r - 1) / (3 * r)
    ex = math.log(t) / math.log(t0)
    out = c ** (-lp) * n ** ex * M ** (1 - lp)
    for i in I3:
        l3 = cp.l3[i]
        e = (math.log(l3) - math.log(p1)) / math.log(r)
        out += 3 * cp.l1[i] * (n ** ex - n ** (math.log(t - p1 + l3) / math.log(t0))) / (p1 - l3) \
            * c ** e * M ** e
    tp = t - p1
    for i in I3:
        l3 = cp.l3[i]
        inner = tp + l3 * (t0 ** 2 / tp) ** (-math.log(r) / (2 * math.log(t0)))
        out += 3 * cp.l2[i] / (tp + l3 - t0 ** 2) * (
            (M / float(cp.beta)) ** (1 - math.log(tp) / (2 * math.log(t0))) * n ** (math.log(inner) / math.log(t0))
            - n ** 2)
    return out


def cor4_leading(cp, M, n, t0):
    """Only the first (leading) term of the closed bound."""
    lp = math.log(cp.p1) / math.log(cp.r)
    c = (cp.r - 1) / (3 * cp.r)
    return c ** (-lp) * n ** (math.log(cp.t) / math.log(t0)) * M ** (1 - lp)


# basis transformations


def basis_cost(q, n, n0, M=None):
    """(arithmetic, io) of one recursive basis transformation of an n x n
    matrix, q linear operations per application."""
    levels = 0
    m = n
    while m > 1:
        if m % n0:
            raise ValueError("n = %d is not a power of %d" % (n, n0))
        m //= n0
        levels += 1
    arith = Fraction(q * n * n, n0 * n0) * levels
    io = None
    if M is not None:
        io = 3 * q / n0 ** 2 * n ** 2 * math.log(math.sqrt(2) * n / math.sqrt(M), n0) + 2 * M
    return arith, io


def basis_cost_blocks(q, rows, cols, br, bc):
    """Exact count for an rows x cols matrix cut into br x bc blocks per
    level: every level touches all rows*cols/(br*bc) block positions q times."""
    per_level = q * (rows * cols) // (br * bc)
    total = 0
    while rows > 1 or cols > 1:
        total += per_level
        rows //= br
        cols //= bc
    return total


def omega0(n0, t):
    """Baseline exponent log_{n0} t used to label reports."""
    return math.log(t) / math.log(n0)


def summary(cp, h, x=0, M=None):
    """Dictionary of the predictors at one point."""
    out = {
        "T_x": T_x(cp, x),
        "T_hx": T_hx(cp, h, x),
        "B_hx": B_hx(cp, h, x),
        "Z": Z(cp, h, x),
    }
    try:
        out["lead_bc"] = leading_coefficient_bc(cp)
    except FormulaPole as e:
        out["lead_bc"] = "pole: %s" % e
    if M is not None:
        out["C_hx"] = C_hx(cp, h, x, M)
        out["switch_level"] = switch_level(cp, M)
        out["h_prime"] = h_prime(cp, M)
        out["x_prime"] = x_prime(cp, M)
        out["M_x"] = M_x(cp, M, x)
        out["Mprime_hx"] = Mprime_hx(cp, h, x, M)
        out["R_hx"] = R_hx(cp, h, x, M)
        try:
            out["lead_cc"] = leading_coefficient_cc(cp, max(out["h_prime"], 0.0))
        except FormulaPole as e:
            out["lead_cc"] = "pole"
    return out


# plain bilinear recursion


def _level_ops(alg):
    from .linalg import op_count
    qa = sum(op_count(alg.U))
    qb = sum(op_count(alg.V))
    qc = sum(op_count(alg.W.T))
    return qa, qb, qc


def recursive_counts(alg, n, m, k, cutoff=1):
    """(additions + scalar mults, element mults) of the recursive engine on
    an n x m by m x k product, by recurrence over the levels."""
    n0, m0, k0 = alg.dims
    qa, qb, qc = _level_ops(alg)

    def rec(N, Mm, K):
        if max(N, Mm, K) <= cutoff or N % n0 or Mm % m0 or K % k0 or (N, Mm, K) == (1, 1, 1):
            return N * K * (Mm - 1), N * Mm * K
        a, b, c = N // n0, Mm // m0, K // k0
        lin, mul = rec(a, b, c)
        return alg.t * lin + qa * a * b + qb * b * c + qc * a * c, alg.t * mul

    return rec(n, m, k)


def recursive_leading_coefficient(alg):
    """Coefficient of n^{log_{n0} t} for a square <n0,n0,n0;t> recursion down to scalars."""
    n0, m0, k0 = alg.dims
    if not n0 == m0 == k0:
        raise ValueError("leading coefficient is reported for square base cases only")
    d = alg.t - n0 * n0
    if d <= 0:
        raise FormulaPole("t = %d does not exceed n0^2 = %d" % (alg.t, n0 * n0))
    return 1 + Fraction(sum(_level_ops(alg)), d)


def star_basis_ops(d, n, m, k):
    """Linear operations of the three basis changes around bc* / cc*."""
    from .linalg import op_count
    if d.basis is None or d.basis.is_identity or n * m == 1:
        return 0
    n0, m0, k0 = d.dims
    q1 = sum(op_count(d.basis.eta[0]))
    q2 = sum(op_count(d.basis.eta[1]))
    q3 = sum(op_count(d.basis.output_map()))
    return (basis_cost_blocks(q1, n, m, n0, m0) + basis_cost_blocks(q2, m, k, m0, k0)
            + basis_cost_blocks(q3, n, k, n0, k0))


def io_leading_bc(cp, t0):
    """(coefficient, exponent of n, exponent of M) of the leading term of
    the closed bc bound for square <t0,t0,t0> bases."""
    lp = math.log(cp.p1) / math.log(cp.r)
    c = (cp.r - 1) / (3 * cp.r)
    return c ** (-lp), math.log(cp.t) / math.log(t0), 1 - lp


def io_leading_cc(cp, t0):
    """Leading term of M'(h, 0) with the switch level taken as the real
    solution of Z(h', 0) = M, for square <t0,t0,t0> bases."""
    if not (cp.l4[0] == cp.l4[1] == cp.l4[2] == t0 * t0):
        raise ValueError("the leading IO term is reported for square bases only")
    u0 = cp.u0
    e = math.log(cp.t) / math.log(u0)
    lead = 1 + sum(float(Fraction(cp.l1[i], cp.p1 - cp.l3[i])) for i in I3 if cp.p1 != cp.l3[i])
    coef = 3 * lead * float(cp.beta) ** (e - 1)
    return coef, math.log(cp.t) / math.log(t0), 1 - e
