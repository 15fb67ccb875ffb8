"""Trace computations: the two algorithms against each other and classics."""

import math
import random

import pytest

from avgexp.counting import (TraceResult, order_bsgs, quadratic_twist, trace,
                             trace_naive)
from avgexp.curve import (GlobalCurve, INFINITY, random_point, reduce_curve,
                          scalar_mul)
from avgexp.harness import derive_rng
from avgexp.modarith import sieve_primes


def enumerate_order(C):
    # independent oracle: literally count solutions
    n = 1
    for x in range(C.p):
        rhs = (x ** 3 + C.a * x + C.b) % C.p
        n += sum(1 for y in range(C.p) if y * y % C.p == rhs)
    return n


GENERIC = GlobalCurve(1, 1)
CM = GlobalCurve(-1, 0)


class TestTraceNaive:
    def test_f5_generic(self):
        C = reduce_curve(GENERIC, 5)
        T = trace_naive(C)
        assert (T.a_p, T.N) == (-3, 9)
        assert enumerate_order(C) == 9

    def test_f5_cm(self):
        C = reduce_curve(CM, 5)
        T = trace_naive(C)
        assert (T.N, T.a_p) == (8, -2)
        assert enumerate_order(C) == 8

    def test_matches_enumeration(self):
        for p in (7, 13, 101, 257):
            for E in (GENERIC, CM):
                if p in E.bad_primes:
                    continue
                C = reduce_curve(E, p)
                assert trace_naive(C).N == enumerate_order(C)

    def test_hasse_postcondition(self):
        for p in sieve_primes(3000):
            if p in GENERIC.bad_primes or p < 5:
                continue
            T = trace_naive(reduce_curve(GENERIC, p))
            assert abs(T.a_p) <= math.isqrt(4 * p)

    def test_result_invariants_enforced(self):
        with pytest.raises(ValueError):
            TraceResult(101, 50, 52, "naive")  # Hasse violated
        with pytest.raises(ValueError):
            TraceResult(101, 0, 100, "naive")  # N != p+1-a


class TestOrderBsgs:
    def test_agrees_with_naive_1009(self):
        C = reduce_curve(GENERIC, 1009)
        assert order_bsgs(C, derive_rng(1, 1009)).N == trace_naive(C).N

    def test_agrees_with_naive_10007(self):
        E = GlobalCurve(2, 3)
        C = reduce_curve(E, 10007)
        assert order_bsgs(C, derive_rng(1, 10007)).N == trace_naive(C).N

    def test_overlap_band(self):
        # both algorithms on every good prime in [229, 1500], three curves
        for E in (GENERIC, CM, GlobalCurve(0, 6)):
            for p in sieve_primes(1500):
                if p < 229 or p in E.bad_primes:
                    continue
                C = reduce_curve(E, p)
                assert order_bsgs(C, derive_rng(3, p)).N == trace_naive(C).N

    def test_lagrange_on_random_points(self):
        C = reduce_curve(GENERIC, 100003)
        N = order_bsgs(C, derive_rng(5, 100003)).N
        rng = random.Random(6)
        for _ in range(20):
            assert scalar_mul(N, random_point(C, rng), C) is INFINITY

    def test_rejects_tiny_p(self):
        with pytest.raises(ValueError):
            order_bsgs(reduce_curve(GENERIC, 227), random.Random(0))

    def test_twist_orders_sum(self):
        for p in (1009, 10007):
            C = reduce_curve(GENERIC, p)
            T = quadratic_twist(C)
            assert trace_naive(C).N + trace_naive(T).N == 2 * p + 2


class TestDispatcher:
    def test_routes_naive_below_threshold(self):
        C = reduce_curve(GENERIC, 101)
        assert trace(C, derive_rng(1, 101), threshold=10_000).method == "naive"

    def test_routes_bsgs_above_threshold(self):
        C = reduce_curve(GENERIC, 100003)
        assert trace(C, derive_rng(1, 100003), threshold=10_000).method == "bsgs"

    def test_tiny_primes_forced_naive(self):
        C = reduce_curve(GENERIC, 101)
        assert trace(C, derive_rng(1, 101), threshold=0).method == "naive"

    def test_methods_agree_in_overlap(self):
        for p in sieve_primes(3000):
            if p < 1000 or p in GENERIC.bad_primes:
                continue
            C = reduce_curve(GENERIC, p)
            lo = trace(C, derive_rng(2, p), threshold=10 ** 9)
            hi = trace(C, derive_rng(2, p), threshold=229)
            assert (lo.method, hi.method) == ("naive", "bsgs")
            assert lo.N == hi.N and lo.a_p == hi.a_p


class TestSupersingular:
    def test_cm_trace_zero_at_3_mod_4(self):
        # classical criterion for y^2 = x^3 - x, checked to 2000 here
        # (the acceptance suite extends this to 1e4)
        for p in sieve_primes(2000):
            if p in CM.bad_primes or p % 4 != 3:
                continue
            assert trace_naive(reduce_curve(CM, p)).a_p == 0
