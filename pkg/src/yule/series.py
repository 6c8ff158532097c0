"""Truncated Taylor arithmetic in the single variable u = s12^2.

The joint mgf depends on its middle argument only through u, since the
root product is alpha*beta = s11 s22 - s12^2 while alpha + beta is free of
s12.  Writing

    phi(u) = D(u)**-0.5,   D(u) = prod_j (c_j - lam_j^2 u),
    c_j = (1 + s11 lam_j)(1 + s22 lam_j),

the u^p Taylor coefficients of log D are plain power sums of lam_j^2/c_j, and
one truncated exp turns them into the coefficients a_p of phi.  The mixed
derivative of order m at s12 = 0 is then m! * a_{m/2} for even m and exactly
zero for odd m.  Differentiating in u keeps the diagonal s11 = s22 perfectly
smooth, unlike the divided-difference closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "TruncatedSeries",
    "series_add",
    "series_mul",
    "series_scale",
    "series_exp",
    "series_log",
    "series_powneghalf",
    "log_D_series",
    "dphi_ds12_at_zero",
    "exp_coefficients",
]


@dataclass(frozen=True)
class TruncatedSeries:
    """Degree-capped polynomial sum_p coeffs[p] u^p with value semantics."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, p: int) -> float:
        return self.coeffs[p]

    def __add__(self, other):
        return series_add(self, other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__


def _common_order(a: TruncatedSeries, b: TruncatedSeries) -> int:
    return min(a.order, b.order)


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    p = _common_order(a, b)
    return TruncatedSeries(tuple(a.coeffs[i] + b.coeffs[i] for i in range(p + 1)))


def series_scale(a: TruncatedSeries, c: float) -> TruncatedSeries:
    return TruncatedSeries(tuple(c * x for x in a.coeffs))


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    p = _common_order(a, b)
    out = [0.0] * (p + 1)
    for i in range(p + 1):
        for j in range(p + 1 - i):
            out[i + j] += a.coeffs[i] * b.coeffs[j]
    return TruncatedSeries(tuple(out))


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    """exp of a truncated series; b_p = (1/p) sum_{k=1..p} k a_k b_{p-k}."""
    p = a.order
    out = [0.0] * (p + 1)
    out[0] = math.exp(a.coeffs[0])
    for i in range(1, p + 1):
        out[i] = sum(k * a.coeffs[k] * out[i - k] for k in range(1, i + 1)) / i
    return TruncatedSeries(tuple(out))


def series_log(a: TruncatedSeries) -> TruncatedSeries:
    if a.coeffs[0] <= 0.0:
        raise DomainError("series_log requires a positive constant term")
    p = a.order
    out = [0.0] * (p + 1)
    out[0] = math.log(a.coeffs[0])
    for i in range(1, p + 1):
        acc = i * a.coeffs[i]
        acc -= sum(k * out[k] * a.coeffs[i - k] for k in range(1, i))
        out[i] = acc / (i * a.coeffs[0])
    return TruncatedSeries(tuple(out))


def series_powneghalf(a: TruncatedSeries) -> TruncatedSeries:
    """a**-0.5 as exp(-0.5 log a); constant term must be positive."""
    if a.coeffs[0] <= 0.0:
        raise DomainError("series_powneghalf requires a positive constant term")
    return series_exp(series_scale(series_log(a), -0.5))


def exp_coefficients(la: np.ndarray) -> np.ndarray:
    """Vectorized series_exp: la has shape (P+1, ...) of log-coefficients."""
    out = np.empty_like(la)
    out[0] = np.exp(la[0])
    pmax = la.shape[0] - 1
    for p in range(1, pmax + 1):
        acc = la[1] * out[p - 1]
        for k in range(2, p + 1):
            acc = acc + k * la[k] * out[p - k]
        out[p] = acc / p
    return out


def log_D_series(ctx, s11: float, s22: float, order: int) -> TruncatedSeries:
    """Taylor coefficients of log D(u) at u = 0.

    Coefficient 0 is sum_j log c_j; coefficient p >= 1 is
    -(1/p) sum_j (lam_j^2/c_j)^p.  ``ctx`` is any spectral context exposing
    ``half_log_dn`` and ``ratio_power_tensor``.
    """
    if s11 < 0.0 or s22 < 0.0:
        raise DomainError("log_D_series requires s11, s22 >= 0")
    coeffs = [float(ctx.half_log_dn(np.array([s11]))[0]
                    + ctx.half_log_dn(np.array([s22]))[0])]
    if order >= 1:
        sums = ctx.ratio_power_tensor(np.array([s11]), np.array([s22]), order)
        coeffs.extend(-float(sums[p - 1, 0, 0]) / p for p in range(1, order + 1))
    return TruncatedSeries(tuple(coeffs))


def dphi_ds12_at_zero(ctx, s11: float, s22: float, m: int) -> float:
    """The m-th s12-derivative of the joint mgf at (s11, 0, s22).

    Equals m! times the u^{m/2} coefficient of D(u)**-0.5; exactly zero for
    odd m because the mgf is even in s12.
    """
    if m < 0:
        raise DomainError("derivative order must be >= 0")
    if m % 2 == 1:
        return 0.0
    half = m // 2
    log_d = log_D_series(ctx, s11, s22, half)
    phi = series_exp(series_scale(log_d, -0.5))
    return math.factorial(m) * phi.coeffs[half]
