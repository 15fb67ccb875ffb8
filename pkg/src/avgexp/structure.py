"""Invariant factors (d, e) of the point group: E(F_p) = Z/d x Z/e, d | e.

The exponent e is found as an lcm of random element orders, with two
deterministic accelerators: a complete-splitting test of the cubic pins
whether 2 divides d, and the divisibility constraints on (d, e) often
leave a single admissible exponent long before the sampling window
closes.  A full-enumeration oracle (structure_bruteforce) provides an
independent answer at small p.
"""

import math
from collections import defaultdict
from dataclasses import dataclass

from .curve import INFINITY, ReducedCurve, random_point, scalar_mul
from .modarith import divisors_from_factorization, factorize

DEFAULT_STABILITY = 8
_MAX_RETRIES = 3
_BRUTEFORCE_CAP = 5000


class NotAnnihilated(RuntimeError):
    """N*P was not the identity: the group order upstream is wrong."""


class StructureUnverified(RuntimeError):
    """Invariant checks kept failing after retries; an upstream bug."""


@dataclass(frozen=True)
class GroupStructure:
    """Per-prime record (p, a_p, N, d_p, e_p); construction re-proves
    every divisibility constraint and refuses to exist otherwise."""

    p: int
    a_p: int
    N: int
    d_p: int
    e_p: int

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise StructureUnverified(
                f"p = {self.p}: invariant(s) violated: {', '.join(bad)}")

    def violations(self):
        p, a, N, d, e = self.p, self.a_p, self.N, self.d_p, self.e_p
        if d < 1 or e < 1:
            return ["d, e >= 1"]
        bad = []
        if d * e != N:
            bad.append("d*e = N")
        if e % d:
            bad.append("d | e")
        if (p - 1) % d:
            bad.append("d | p-1")
        if (p + 1 - a) % (d * d):
            bad.append("d^2 | p+1-a")
        if (a - 2) % d:
            bad.append("a = 2 (mod d)")
        if e != (p + 1 - a) // d:
            bad.append("e = (p+1-a)/d")
        if d > math.isqrt(4 * p):
            bad.append("d <= 2*sqrt(p)")
        return bad


def element_order(P, C: ReducedCurve, N: int, factorization) -> int:
    """Exact order of P given the group order N and its factorization.

    Starts at N and strips each prime while the scaled point stays at
    the identity.  Raises NotAnnihilated when N*P != infinity.
    """
    if scalar_mul(N, P, C) is not INFINITY:
        raise NotAnnihilated(f"group order {N} does not annihilate {P} at p = {C.p}")
    o = N
    for q, _ in factorization:
        while o % q == 0 and scalar_mul(o // q, P, C) is INFINITY:
            o //= q
    return o


def _poly_mul_mod(u, v, a, b, p):
    # multiply deg<3 polys mod (x^3 + a*x + b) over F_p
    u0, u1, u2 = u
    v0, v1, v2 = v
    c0 = u0 * v0
    c1 = u0 * v1 + u1 * v0
    c2 = u0 * v2 + u1 * v1 + u2 * v0
    c3 = u1 * v2 + u2 * v1
    c4 = u2 * v2
    c2 -= a * c4
    c1 -= b * c4 + a * c3
    c0 -= b * c3
    return (c0 % p, c1 % p, c2 % p)


def _cubic_root_count(a, b, p) -> int:
    """Number of roots of x^3 + a*x + b in F_p (0, 1 or 3).

    deg gcd(x^p - x, cubic); the cubic is squarefree at good primes, and
    a cubic with two rational roots has a third, so 2 never occurs.
    """
    # x^p mod cubic by square-and-multiply
    result = (1, 0, 0)
    base = (0, 1, 0)
    k = p
    while k:
        if k & 1:
            result = _poly_mul_mod(result, base, a, b, p)
        base = _poly_mul_mod(base, base, a, b, p)
        k >>= 1
    # gcd(cubic, x^p - x)
    f = [b, a, 0, 1]
    g = [result[0], (result[1] - 1) % p, result[2]]
    while any(g):
        while g and g[-1] == 0:
            g.pop()
        if not g:
            break
        inv = pow(g[-1], -1, p)
        r = f[:]
        for shift in range(len(r) - len(g), -1, -1):
            coef = r[shift + len(g) - 1] * inv % p
            for i, c in enumerate(g):
                r[shift + i] = (r[shift + i] - coef * c) % p
        while r and r[-1] == 0:
            r.pop()
        f, g = g, r
    count = len(f) - 1
    if count == 2:
        raise ArithmeticError(f"squarefree cubic with 2 roots mod {p}")
    return count


def has_full_two_torsion(C: ReducedCurve) -> bool:
    """True iff the cubic splits completely, i.e. 2 | d."""
    return _cubic_root_count(C.a, C.b, C.p) == 3


def _admissible_exponents(L, N, divisors, p, a_p, two_split):
    """Divisors e of N, multiples of L, consistent with every (d, e)
    divisibility constraint.  The true exponent is always among them."""
    out = []
    for e in divisors:
        if e % L:
            continue
        d = N // e
        if e % d or (p - 1) % d or (a_p - 2) % d:
            continue
        if two_split is not None and two_split != (d % 2 == 0):
            continue
        out.append(e)
    return out


def exponent_sampling(C: ReducedCurve, N: int, factorization, rng,
                      stability: int = DEFAULT_STABILITY) -> int:
    """Candidate exponent: lcm of random element orders.

    Stops as soon as the admissible set is a singleton (then the value
    is exact), or once the lcm has survived `stability` consecutive
    draws unchanged -- but only while the lcm is itself admissible;
    an inadmissible lcm is provably short, so sampling continues.  The
    result always divides the true exponent and equals it except with
    probability at most sum_{q | e} q^-stability.
    """
    p = C.p
    a_p = p + 1 - N
    divisors = divisors_from_factorization(factorization)
    two_split = has_full_two_torsion(C) if N % 2 == 0 else None
    L = 1
    stable = 0
    draws = 0
    cap = 64 * max(stability, 1)  # unreachable unless N is wrong upstream
    cands = _admissible_exponents(L, N, divisors, p, a_p, two_split)
    while True:
        if len(cands) == 1:
            return cands[0]
        if stable >= stability and L in cands:
            return L
        if draws >= cap:
            return L
        P = random_point(C, rng)
        o = element_order(P, C, N, factorization)
        draws += 1
        L2 = L * o // math.gcd(L, o)
        if L2 == L:
            stable += 1
        else:
            L, stable = L2, 0
            cands = _admissible_exponents(L, N, divisors, p, a_p, two_split)


def group_structure(C: ReducedCurve, T, rng,
                    stability: int = DEFAULT_STABILITY) -> GroupStructure:
    """(d, e) for the trace result T, with all invariants enforced.

    A violated invariant means the sampled exponent was short; retry
    with a doubled stability window up to 3 times, then give up loudly
    (a persistent failure indicates a bug, not bad luck).
    """
    N = T.N
    factorization = factorize(N)
    window = stability
    last = None
    for _ in range(_MAX_RETRIES + 1):
        e = exponent_sampling(C, N, factorization, rng, window)
        try:
            return GroupStructure(C.p, T.a_p, N, N // e, e)
        except StructureUnverified as err:
            last = err
            window *= 2
    raise StructureUnverified(
        f"p = {C.p}: structure undetermined after {_MAX_RETRIES} retries ({last})")


def structure_bruteforce(C: ReducedCurve) -> GroupStructure:
    """Independent oracle: enumerate every point, take the lcm of all
    element orders.  Self-contained group law; O(p)-ish memory, meant
    for p <= 5000."""
    p = C.p
    if p > _BRUTEFORCE_CAP:
        raise ValueError(f"brute force capped at p <= {_BRUTEFORCE_CAP}")
    a, b = C.a, C.b

    roots = defaultdict(list)
    for y in range(p):
        roots[y * y % p].append(y)
    points = []
    for x in range(p):
        rhs = (x * x % p * x + a * x + b) % p
        for y in roots.get(rhs, ()):
            points.append((x, y))
    N = len(points) + 1
    factorization = factorize(N)

    def padd(P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return None
            s = (3 * x1 * x1 + a) * pow(2 * y1, p - 2, p) % p
        else:
            s = (y2 - y1) * pow(x2 - x1, p - 2, p) % p
        x3 = (s * s - x1 - x2) % p
        return (x3, (s * (x1 - x3) - y1) % p)

    def pmul(k, P):
        R = None
        while k:
            if k & 1:
                R = padd(R, P)
            P = padd(P, P)
            k >>= 1
        return R

    def order_of(P):
        o = N
        for q, _ in factorization:
            while o % q == 0 and pmul(o // q, P) is None:
                o //= q
        return o

    orders = {}
    for P in points:
        if P in orders:
            continue
        o = order_of(P)
        # label the whole cyclic subgroup: ord(k*P) = o / gcd(o, k)
        Q, k = P, 1
        while Q is not None:
            orders.setdefault(Q, o // math.gcd(o, k))
            Q = padd(Q, P)
            k += 1
    exponent = math.lcm(*orders.values()) if orders else 1
    return GroupStructure(p, p + 1 - N, N, N // exponent, exponent)
