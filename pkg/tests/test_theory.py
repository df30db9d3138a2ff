import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kconn.model_spec import JointDistribution, moments
from kconn.theory import (
    DegenerateError,
    NotSolvableError,
    asymptotic_expected_ND,
    hat_qrs_bound,
    lambda_star,
    m_over_n_asymptotic,
    predicted_expected_ND,
    qrs_bound_sr1,
    qrs_bound_sr2,
    solve_m,
)


def scan_solve(n, k, kappa, c, m_hi):
    """Linear-scan oracle: argmin over the decreasing branch, ties to smaller m."""
    lo = max(1, math.ceil((k - 1) * n / kappa))
    best = None
    for m in range(lo, m_hi):
        d = abs(lambda_star(n, m, k, kappa) - c)
        if best is None or d < best[0]:
            best = (d, m)
    return best[1]


def exact_qrs(n, s, r, x, q):
    """P{no edge between (s, s+r] and (s+r, n]} by summing over block occupancies."""
    tot = 0.0
    for a in range(min(r, x) + 1):
        for b in range(min(n - s - r, x - a) + 1):
            c = x - a - b
            if c > s:
                continue
            tot += math.comb(r, a) * math.comb(n - s - r, b) * math.comb(s, c) * (1 - q) ** (a * b)
    return tot / math.comb(n, x)


def layer_degree_vectors(n, atoms):
    """Distribution of a single layer's degree vector, by full enumeration."""
    out = defaultdict(float)
    for x, q, p in atoms:
        xt = min(x, n)
        subsets = list(itertools.combinations(range(n), xt))
        pairs_all = [list(itertools.combinations(sub, 2)) for sub in subsets]
        for sub, pairs in zip(subsets, pairs_all):
            for mask in range(1 << len(pairs)):
                deg = [0] * n
                ne = 0
                for i, (u, v) in enumerate(pairs):
                    if mask >> i & 1:
                        deg[u] += 1
                        deg[v] += 1
                        ne += 1
                prob = p / len(subsets) * q**ne * (1 - q) ** (len(pairs) - ne)
                if prob:
                    out[tuple(deg)] += prob
    return list(out.items())


def enumerate_expected_ND(n, m, k, atoms):
    per_layer = layer_degree_vectors(n, atoms)
    total = 0.0
    for combo in itertools.product(per_layer, repeat=m):
        prob = math.prod(p for _, p in combo)
        count = 0
        for v in range(n):
            ds = [deg[v] for deg, _ in combo]
            if sum(ds) == k - 1 and all(d <= 1 for d in ds):
                count += 1
        total += prob * count
    return total


class TestLambda:
    def test_values(self):
        assert lambda_star(100, 100, 2, 2.0) == pytest.approx(math.log(100) - 2, abs=1e-15)
        assert lambda_star(100, 100, 2, 2.0) == pytest.approx(2.60517, abs=1e-5)
        # ln 282 - 5.64
        assert lambda_star(100, 282, 2, 2.0) == pytest.approx(0.0019070709, abs=1e-9)

    @given(st.integers(2, 10**6), st.integers(1, 10**7), st.floats(0.1, 10))
    def test_k1_drops_middle_term(self, n, m, kappa):
        assert lambda_star(n, m, 1, kappa) == pytest.approx(math.log(n) - m / n * kappa, rel=1e-12, abs=1e-9)

    @pytest.mark.parametrize("n,k,kappa", [(100, 2, 2.0), (2000, 3, 1.3), (10**5, 4, 5.0)])
    def test_strictly_decreasing_on_branch(self, n, k, kappa):
        lo = math.ceil((k - 1) * n / kappa) + 1
        ms = np.unique(np.geomspace(lo, 1000 * lo, 2000).astype(np.int64))
        lam = np.array([lambda_star(n, int(m), k, kappa) for m in ms])
        assert np.all(np.diff(lam) < 0)


class TestSolveM:
    def test_k2_example(self):
        assert solve_m(100, 2, 2.0, 0.0) == 282
        assert scan_solve(100, 2, 2.0, 0.0, 2000) == 282

    def test_k1_example(self):
        # |lambda(230)| = 0.0052 < |lambda(231)| = 0.0148
        assert scan_solve(100, 1, 2.0, 0.0, 2000) == 230
        assert solve_m(100, 1, 2.0, 0.0) == 230

    @given(st.integers(10, 400), st.integers(1, 4), st.floats(0.5, 6.0), st.floats(-6, 3))
    def test_matches_scan(self, n, k, kappa, c):
        try:
            m = solve_m(n, k, kappa, c)
        except NotSolvableError:
            lo = max(1, math.ceil((k - 1) * n / kappa))
            assert lambda_star(n, lo, k, kappa) < c
            return
        assert m == scan_solve(n, k, kappa, c, m + 50)
        # within one integer step of the target
        assert abs(lambda_star(n, m, k, kappa) - c) <= abs(lambda_star(n, m, k, kappa) - lambda_star(n, m + 1, k, kappa)) + 1e-12

    def test_round_trip_large(self):
        n, k, kappa = 10**5, 3, 2.5
        for c in (-5.0, -1.0, 0.0, 2.0):
            m = solve_m(n, k, kappa, c)
            step = abs(lambda_star(n, m + 1, k, kappa) - lambda_star(n, m, k, kappa))
            assert abs(lambda_star(n, m, k, kappa) - c) <= step

    def test_not_solvable(self):
        with pytest.raises(NotSolvableError):
            solve_m(100, 2, 2.0, 50.0)
        with pytest.raises(ValueError):
            solve_m(100, 2, 0.0, 0.0)

    def test_asymptotic_expansion_cross_check(self):
        n, k, kappa = 10**6, 2, 2.0
        m = solve_m(n, k, kappa, 0.0)
        approx = m_over_n_asymptotic(n, k, kappa, 0.0)
        # O(ln ln n / ln n) relative error
        assert abs(m / n - approx) / (m / n) < math.log(math.log(n)) / math.log(n)


class TestPredictedND:
    def test_small_exact(self):
        assert predicted_expected_ND(3, 2, 2, 2.0, 2.0) == pytest.approx(4 / 3, abs=1e-12)

    def test_nine_edge_pairs(self):
        # each layer is one uniform edge of K3; enumerate the 9 ordered pairs
        edges = list(itertools.combinations(range(3), 2))
        total = Fraction(0)
        for e1, e2 in itertools.product(edges, repeat=2):
            d = [[(v in e) for v in range(3)] for e in (e1, e2)]
            total += sum(1 for v in range(3) if d[0][v] + d[1][v] == 1)
        assert total / 9 == Fraction(4, 3)
        assert enumerate_expected_ND(3, 2, 2, [(2, 1.0, 1.0)]) == pytest.approx(4 / 3, abs=1e-12)

    def test_k1_reduces(self):
        assert predicted_expected_ND(50, 70, 1, 2.5, 1.0) == pytest.approx(50 * (1 - 2.5 / 50) ** 70, rel=1e-12)

    @pytest.mark.parametrize(
        "n,m,k,atoms",
        [
            (3, 2, 2, [(2, 1.0, 1.0)]),
            (4, 3, 2, [(2, 1.0, 0.5), (3, 0.5, 0.5)]),
            (4, 2, 3, [(3, 0.4, 0.3), (4, 0.7, 0.3), (1, 1.0, 0.2), (5, 0.2, 0.2)]),
            (4, 3, 3, [(2, 0.6, 0.5), (4, 0.3, 0.5)]),
            (3, 3, 1, [(0, 0.0, 0.25), (2, 0.5, 0.25), (3, 0.9, 0.5)]),
            (4, 3, 4, [(2, 1.0, 0.4), (3, 1.0, 0.6)]),
        ],
    )
    def test_matches_enumeration(self, n, m, k, atoms):
        d = JointDistribution.from_atoms(atoms)
        tq = moments(d, n)
        got = predicted_expected_ND(n, m, k, tq.kappa_n, tq.tau_n)
        assert got == pytest.approx(enumerate_expected_ND(n, m, k, atoms), rel=1e-12, abs=1e-15)

    def test_asymptotic_consistency(self):
        n, k = 10**4, 2
        d = JointDistribution.point_mass(2, 1.0)
        tq = moments(d, n)
        m = solve_m(n, k, tq.kappa_n, 0.0)
        lam = lambda_star(n, m, k, tq.kappa_n)
        pred = predicted_expected_ND(n, m, k, tq.kappa_n, tq.tau_n)
        assert pred == pytest.approx(asymptotic_expected_ND(k, tq.tau_star, lam), rel=0.05)

    def test_log_space_no_underflow(self):
        v = predicted_expected_ND(10**6, 10**7, 4, 1.0, 0.8)
        assert math.isfinite(v) and v > 0

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            predicted_expected_ND(3, 2, 2, 3.0, 1.0)


class TestBounds:
    def test_sr1_values(self):
        assert qrs_bound_sr1(10, 0, 5, 1.0) == pytest.approx(1 - 50 / 90, abs=1e-15)
        assert qrs_bound_sr1(10, 1, 4, 0.5) == pytest.approx(1 - 20 / 72 + 0.2, abs=1e-15)
        assert qrs_bound_sr1(10, 1, 4, 0.5) == pytest.approx(0.92222, abs=1e-5)
        assert qrs_bound_sr1(30, 3, 7, 0.0) == pytest.approx(1 + 12 / 30, abs=1e-15)

    def test_sr2_values(self):
        b = qrs_bound_sr2(100, 0, 2, 2, 1.0)
        assert b.value == pytest.approx(math.exp(-0.04) + (2 / 98) ** 2, abs=1e-15)
        assert b.value == pytest.approx(0.9612059, abs=1e-7)
        assert b.overlap == 0.0
        assert qrs_bound_sr2(100, 3, 5, 7, 0.0).value == 1.0

    def test_sr2_decomposition(self):
        b = qrs_bound_sr2(200, 2, 10, 20, 0.05)
        assert b.value == pytest.approx(b.leading + b.r1s * b.h + b.overlap, abs=1e-15)
        assert b.r1s == pytest.approx(100 / 188**2)

    @pytest.mark.parametrize("fn,args", [
        (qrs_bound_sr1, (10, 0, 6, 0.5)),
        (qrs_bound_sr1, (10, -1, 2, 0.5)),
        (qrs_bound_sr1, (10, 0, 0, 0.5)),
        (qrs_bound_sr1, (10, 0, 2, 1.5)),
        (qrs_bound_sr2, (10, 0, 2, 1, 0.5)),
        (qrs_bound_sr2, (10, 0, 2, 11, 0.5)),
    ])
    def test_domain(self, fn, args):
        with pytest.raises(ValueError):
            fn(*args)

    def test_bounds_dominate_exact_probability(self):
        for n in range(4, 13):
            for s in range(n):
                for r in range(1, (n - s) // 2 + 1):
                    for x in range(2, n + 1):
                        for q in (0.0, 0.05, 0.3, 0.7, 1.0):
                            e = exact_qrs(n, s, r, x, q)
                            assert qrs_bound_sr1(n, s, r, q) >= e - 1e-12
                            assert qrs_bound_sr2(n, s, r, x, q).value >= e - 1e-12

    def test_exact_oracle_against_subset_enumeration(self):
        n, s, r = 7, 1, 2
        for x in (2, 3, 5):
            for q in (0.3, 1.0):
                tot = 0.0
                subs = list(itertools.combinations(range(1, n + 1), x))
                for sub in subs:
                    a = sum(1 for v in sub if s < v <= s + r)
                    b = sum(1 for v in sub if v > s + r)
                    tot += (1 - q) ** (a * b)
                assert exact_qrs(n, s, r, x, q) == pytest.approx(tot / len(subs), abs=1e-14)

    def test_hat_value(self):
        b = hat_qrs_bound(10**4, 1, 2, 2.0, 3.0)
        assert b.value == pytest.approx(1 - 4 / 9999 + 16 / (9999 * math.log(1e4)), abs=1e-15)
        assert b.value == pytest.approx(0.99977, abs=1e-5)
        assert b.asymptotic_only

    def test_hat_affine_in_r(self):
        d1 = 1 - hat_qrs_bound(10**4, 1, 3, 2.0, 3.0).value
        d2 = 1 - hat_qrs_bound(10**4, 1, 6, 2.0, 3.0).value
        assert d2 == pytest.approx(2 * d1, rel=1e-12)
