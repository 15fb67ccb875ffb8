"""Trace of Frobenius and group order, by two independent algorithms.

trace_naive sums the quadratic character of the cubic over all of F_p;
order_bsgs pins the order inside the Hasse interval with baby-step
giant-step element annihilators, falling back to quadratic-twist samples
when one point's order leaves several candidates.  Every result is
checked against the Hasse bound |a_p| < 2*sqrt(p) before it leaves this
module.
"""

import math
from dataclasses import dataclass

import numpy as np

from .curve import INFINITY, ReducedCurve, add, neg, random_point, scalar_mul
from .modarith import factorize, legendre

_NAIVE_CAP = 1 << 31  # int64 intermediates in the vectorized sum
_MAX_SAMPLES = 64
_CHUNK = 1 << 22


class AmbiguityExhausted(RuntimeError):
    """order_bsgs could not pin the order; signals a logic bug upstream."""


@dataclass(frozen=True)
class TraceResult:
    p: int
    a_p: int
    N: int
    method: str

    def __post_init__(self):
        if self.N != self.p + 1 - self.a_p:
            raise ValueError("N and a_p disagree")
        # 4p is never a perfect square, so |a| < 2*sqrt(p) <=> |a| <= isqrt(4p)
        if abs(self.a_p) > math.isqrt(4 * self.p):
            raise ValueError(f"Hasse bound violated at p = {self.p}: a_p = {self.a_p}")


def trace_naive(C: ReducedCurve) -> TraceResult:
    """Exact a_p = -sum_x chi(x^3 + a*x + b) by full character sum, O(p)."""
    p = C.p
    if p >= _NAIVE_CAP:
        raise ValueError(f"p = {p} too large for the vectorized character sum")
    chi = np.full(p, -1, dtype=np.int8)
    for lo in range(0, (p + 1) // 2, _CHUNK):
        half = np.arange(lo, min(lo + _CHUNK, (p + 1) // 2), dtype=np.int64)
        chi[(half * half) % p] = 1
    chi[0] = 0
    total = 0
    for lo in range(0, p, _CHUNK):
        x = np.arange(lo, min(lo + _CHUNK, p), dtype=np.int64)
        rhs = (x * x % p) * x % p
        rhs = (rhs + C.a * x + C.b) % p
        total += int(chi[rhs].sum())
    return TraceResult(p, -total, p + 1 + total, "naive")


def quadratic_twist(C: ReducedCurve) -> ReducedCurve:
    """The twist by the smallest nonresidue; orders sum to 2p + 2."""
    c = 2
    while legendre(c, C.p) != -1:
        c += 1
    c2 = c * c % C.p
    return ReducedCurve(C.p, C.a * c2 % C.p, C.b * c2 % C.p * c % C.p)


def _annihilator_gcd(P, C, lo, hi):
    """gcd of all n in [lo, hi] with n*P = infinity.

    Baby-step giant-step over the window; [lo, hi] always contains a
    multiple of ord(P) because the group order lies in it.
    """
    p = C.p
    width = hi - lo + 1
    m = math.isqrt(width) + 1
    # baby steps j*P, keeping every j per x-coordinate (small orders wrap)
    baby = {}
    Q = INFINITY
    for j in range(m):
        if j > 0 and Q is INFINITY:
            return j  # ord(P) = j found outright
        if Q is not INFINITY:
            baby.setdefault(Q[0], []).append((j, Q[1]))
        Q = add(Q, P, C)
    Q0 = scalar_mul(p + 1, P, C)
    mP = scalar_mul(m, P, C)
    neg_mP = neg(mP, C)
    # u = i*m +- j sweeps [-B, B] where n = p + 1 - u
    B = p + 1 - lo
    i_min = -(B // m) - 1
    i_max = B // m + 1
    matches = set()
    if i_min < 0:
        offset = scalar_mul(-i_min, mP, C)
    else:
        offset = scalar_mul(i_min, neg_mP, C)
    R = add(Q0, offset, C)
    for i in range(i_min, i_max + 1):
        if R is INFINITY:
            matches.add(i * m)
        else:
            for j, y in baby.get(R[0], ()):
                if y == R[1]:
                    matches.add(i * m + j)
                if y == p - R[1] or (y == 0 == R[1]):
                    matches.add(i * m - j)
        R = add(R, neg_mP, C)
    anns = [p + 1 - u for u in matches if lo <= p + 1 - u <= hi]
    if not anns:
        raise AmbiguityExhausted(f"no annihilator in Hasse window at p = {p}")
    return math.gcd(*anns)


def _point_order(P, C, lo, hi) -> int:
    """Exact order of P via the gcd of its window annihilators."""
    g = _annihilator_gcd(P, C, lo, hi)
    for q, mult in factorize(g):
        for _ in range(mult):
            if scalar_mul(g // q, P, C) is INFINITY:
                g //= q
            else:
                break
    return g


def _crt_candidates(L_E, L_T, p, lo, hi, cap=3):
    """Orders n in [lo, hi] with L_E | n and L_T | (2p + 2 - n).

    Returns at most cap + 1 of them (enough to detect non-uniqueness).
    """
    g = math.gcd(L_E, L_T)
    target = 2 * p + 2
    if target % g:
        return []
    # solve L_E * t = target (mod L_T)
    lt = L_T // g
    t0 = (target // g) * pow(L_E // g, -1, lt) % lt if lt > 1 else 0
    n0 = L_E * t0
    step = L_E * lt
    first = n0 + ((lo - n0 + step - 1) // step) * step
    out = []
    n = first
    while n <= hi and len(out) <= cap:
        out.append(n)
        n += step
    return out


def order_bsgs(C: ReducedCurve, rng) -> TraceResult:
    """Exact group order from random-point annihilators, O(p^{1/4}) per point.

    Points from the curve and its quadratic twist alternate; their order
    lcms shrink the candidate set until exactly one order survives in the
    Hasse interval.
    """
    p = C.p
    if p < 229:
        raise ValueError("order_bsgs needs p >= 229; use trace_naive")
    B = math.isqrt(4 * p)
    lo, hi = p + 1 - B, p + 1 + B
    twist = quadratic_twist(C)
    L_E = L_T = 1
    for attempt in range(_MAX_SAMPLES):
        on_twist = attempt % 2 == 1
        side = twist if on_twist else C
        P = random_point(side, rng)
        o = _point_order(P, side, lo, hi)
        if on_twist:
            L_T = L_T * o // math.gcd(L_T, o)
        else:
            L_E = L_E * o // math.gcd(L_E, o)
        cands = _crt_candidates(L_E, L_T, p, lo, hi)
        if len(cands) == 1:
            N = cands[0]
            return TraceResult(p, p + 1 - N, N, "bsgs")
        if not cands:
            raise AmbiguityExhausted(f"inconsistent order constraints at p = {p}")
    raise AmbiguityExhausted(f"{_MAX_SAMPLES} samples left the order ambiguous at p = {p}")


def trace(C: ReducedCurve, rng, threshold: int = 10_000) -> TraceResult:
    """Dispatch: full character sum below threshold, BSGS above.

    BSGS needs p >= 229 for sane interval spacing, so tiny primes always
    take the naive route.
    """
    if C.p < max(threshold, 229):
        return trace_naive(C)
    return order_bsgs(C, rng)
