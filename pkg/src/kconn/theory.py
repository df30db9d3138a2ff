"""Threshold parameter, its inversion for m, and single-layer probability bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model_spec import h as h_fn

__all__ = [
    "NotSolvableError",
    "DegenerateError",
    "QBound",
    "HatQBound",
    "lambda_star",
    "lambda_slope",
    "solve_m",
    "m_over_n_asymptotic",
    "predicted_expected_ND",
    "log_predicted_expected_ND",
    "asymptotic_expected_ND",
    "qrs_bound_sr1",
    "qrs_bound_sr2",
    "hat_qrs_bound",
]

M_MAX = 10**9


class NotSolvableError(ValueError):
    """No m on the decreasing branch reaches the target threshold value."""


class DegenerateError(ValueError):
    pass


def lambda_star(n: float, m: float, k: int, kappa: float) -> float:
    """ln n + (k-1) ln(m/n) - (m/n) kappa.

    With ``kappa = kappa_star`` this is the untruncated threshold parameter;
    with the n-truncated kappa it is its finite-n counterpart.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    return math.log(n) + (k - 1) * math.log(m / n) - (m / n) * kappa


def lambda_slope(n: float, m: float, k: int, kappa: float) -> float:
    return (k - 1) / m - kappa / n


def solve_m(n: int, k: int, kappa: float, c_target: float) -> int:
    """Integer m on the decreasing branch of lambda with |lambda(m) - c| minimal.

    The branch starts at ceil((k-1) n / kappa).  Ties go to the smaller m.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    lo = max(1, math.ceil((k - 1) * n / kappa))

    def lam(m):
        return lambda_star(n, m, k, kappa)

    if lam(lo) < c_target:
        raise NotSolvableError(
            f"target {c_target} exceeds the branch maximum lambda({lo}) = {lam(lo):.6g}"
        )
    if lam(M_MAX) > c_target:
        raise NotSolvableError(f"lambda stays above {c_target} for all m <= {M_MAX}")
    # largest m with lam(m) >= c
    a, b = lo, M_MAX
    while b - a > 1:
        mid = (a + b) // 2
        if lam(mid) >= c_target:
            a = mid
        else:
            b = mid
    if lam(b) >= c_target:
        a = b
    if a == M_MAX:
        return a
    return a if abs(lam(a) - c_target) <= abs(lam(a + 1) - c_target) else a + 1


def m_over_n_asymptotic(n: int, k: int, kappa: float, lam: float) -> float:
    """Leading terms of the closed-form expansion of m/n for a given lambda.

    (ln n + (k-1) ln ln n - (k-1) ln kappa - lam) / kappa, accurate only up
    to O(ln ln n / ln n) relative terms; kept as a cross-check of solve_m.
    """
    ln = math.log(n)
    return (ln + (k - 1) * math.log(ln) - (k - 1) * math.log(kappa) - lam) / kappa


def log_predicted_expected_ND(n: int, m: int, k: int, kappa_n: float, tau_n: float) -> float:
    if kappa_n >= n:
        raise DegenerateError(f"kappa_n={kappa_n} >= n={n}: 1 - kappa/n is not positive")
    if not 0 <= tau_n <= kappa_n:
        raise ValueError("need 0 <= tau_n <= kappa_n")
    if m < k - 1:
        raise ValueError("need m >= k-1")
    j = k - 1
    if j > 0 and tau_n == 0:
        return -math.inf
    log_binom = math.lgamma(m + 1) - math.lgamma(j + 1) - math.lgamma(m - j + 1)
    out = math.log(n) + log_binom + (m - j) * math.log1p(-kappa_n / n)
    if j:
        out += j * math.log(tau_n / n)
    return out


def predicted_expected_ND(n: int, m: int, k: int, kappa_n: float, tau_n: float) -> float:
    """n C(m, k-1) (tau/n)^(k-1) (1 - kappa/n)^(m-k+1), evaluated in log space.

    Exact expected count of vertices whose k-1 neighbours all come from
    distinct layers, one edge each, for i.i.d. layers.
    """
    return math.exp(log_predicted_expected_ND(n, m, k, kappa_n, tau_n))


def asymptotic_expected_ND(k: int, tau_star: float, lam: float) -> float:
    """Large-n form (tau*)^(k-1) / (k-1)! * exp(lambda)."""
    return tau_star ** (k - 1) / math.factorial(k - 1) * math.exp(lam)


def _check_rs(n, s, r):
    if s < 0 or r < 1 or 2 * r > n - s:
        raise ValueError(f"need s >= 0 and 1 <= r <= (n-s)/2; got n={n}, s={s}, r={r}")


def qrs_bound_sr1(n: int, s: int, r: int, q: float) -> float:
    _check_rs(n, s, r)
    if not 0.0 <= q <= 1.0:
        raise ValueError("q outside [0, 1]")
    ns = n - s
    return 1.0 - 2.0 * q * r * (ns - r) / (ns * (ns - 1)) + (s + 1) * s / n


@dataclass(frozen=True)
class QBound:
    value: float
    leading: float
    r1s: float
    overlap: float
    h: float

    @property
    def clamped(self) -> float:
        return min(1.0, self.value)


def qrs_bound_sr2(n: int, s: int, r: int, x: int, q: float) -> QBound:
    """Bound on P{no layer edge joins (s, s+r] to (s+r, n]} for one G(x, q) layer.

    ``leading`` is 1 - (1 - exp(-r x/(n-s))) h, ``r1s`` the factor r^2/(n-s-r)^2
    and ``overlap`` the s r x^2 / (n (n-s)) h term; value = leading + r1s*h + overlap.
    """
    _check_rs(n, s, r)
    if x < 2 or x > n:
        raise ValueError("need 2 <= x <= n")
    hv = h_fn(x, q)
    ns = n - s
    r1s = r * r / (ns - r) ** 2
    leading = 1.0 + math.expm1(-r * x / ns) * hv
    overlap = s * r * x * x / (n * ns) * hv
    return QBound(value=leading + r1s * hv + overlap, leading=leading, r1s=r1s, overlap=overlap, h=hv)


@dataclass(frozen=True)
class HatQBound:
    value: float
    asymptotic_only: bool = True


def hat_qrs_bound(n: int, s: int, r: int, kappa_star: float, mu: float) -> HatQBound:
    """1 - r kappa*/(n-s) + (2 + mu (s+1)) r / ((n-s) ln n).

    Only asserted for n beyond an unspecified size, hence ``asymptotic_only``.
    """
    if n <= s or r < 1:
        raise ValueError("need n > s and r >= 1")
    ns = n - s
    return HatQBound(1.0 - r * kappa_star / ns + (2.0 + mu * (s + 1)) * r / (ns * math.log(n)))
