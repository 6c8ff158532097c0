"""Moment generating functions of the empirical quadratic forms.

``phi_n(s11, s12, s22)`` is the joint mgf of the centered sums of squares and
products of the two coupled walks; it factors through the alternative
characteristic polynomial as ``(d_n(alpha) d_n(beta))**-0.5`` where alpha and
beta are the roots of ``z^2 + (s11+s22) z + (s11 s22 - s12^2)``.  The
univariate mgfs of the denominator variables are

    phi_Bn(s) = d_n(-2s/n)**-0.5,        phi_B(s) = (sinh sqrt(2s)/sqrt(2s))**-0.5.

Arguments outside the validity region (s11, s22 >= 0, s12^2 <= s11 s22) are
rejected rather than analytically continued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import KernelContext, dn_neg, dn_neg_log

__all__ = ["MgfPoint", "AlphaBeta", "alpha_beta", "phi_n", "phi_n_spectral",
           "phi_Bn", "phi_B", "log_phi_B"]


@dataclass(frozen=True)
class MgfPoint:
    """A point in the validity region of the trivariate mgf."""

    s11: float
    s12: float
    s22: float

    def __post_init__(self):
        if not (self.s11 >= 0.0 and self.s22 >= 0.0):
            raise DomainError(
                f"s11 and s22 must be >= 0, got ({self.s11}, {self.s22})")
        if self.s12 * self.s12 > self.s11 * self.s22:
            raise DomainError(
                f"s12^2 <= s11*s22 required, got s12={self.s12}, "
                f"s11*s22={self.s11 * self.s22}")


@dataclass(frozen=True)
class AlphaBeta:
    alpha: float
    beta: float


def alpha_beta(p: MgfPoint) -> AlphaBeta:
    """Roots of z^2 + (s11+s22) z + (s11 s22 - s12^2); alpha <= beta <= 0."""
    root = math.sqrt((p.s11 - p.s22) ** 2 + 4.0 * p.s12 * p.s12)
    alpha = -0.5 * (p.s11 + p.s22 + root)
    beta = -0.5 * (p.s11 + p.s22 - root)
    return AlphaBeta(alpha=alpha, beta=beta)


def phi_n(ctx: KernelContext, p: MgfPoint) -> float:
    """Joint mgf via the characteristic-polynomial route; in (0, 1]."""
    ab = alpha_beta(p)
    # alpha, beta <= 0, so both evaluations sit on the stable half-axis
    log_val = dn_neg_log(ctx.n, -ab.alpha) + dn_neg_log(ctx.n, -ab.beta)
    return float(np.exp(-0.5 * log_val))


def phi_n_spectral(ctx: KernelContext, p: MgfPoint) -> float:
    """Joint mgf as the eigenvalue product; cross-check backend for phi_n."""
    lam = ctx.eigenvalues
    factors = (1.0 + (p.s11 + p.s22) * lam
               + (p.s11 * p.s22 - p.s12 * p.s12) * lam * lam)
    return float(np.exp(-0.5 * np.log(factors).sum()))


def phi_Bn(ctx: KernelContext, s) -> float | np.ndarray:
    """mgf of the denominator variable B_n: d_n(-2s/n)**-0.5, s >= 0."""
    s_arr = np.asarray(s, dtype=np.float64)
    if (s_arr < 0).any():
        raise DomainError("phi_Bn requires s >= 0")
    out = np.exp(-0.5 * dn_neg_log(ctx.n, 2.0 * s_arr / ctx.n))
    return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out


def log_phi_B(s) -> np.ndarray:
    """log phi_B(s) = -0.5 log(sinh sqrt(2s)/sqrt(2s)), vectorized, s >= 0.

    Near 0 the ratio is evaluated by its even Taylor series to dodge the 0/0.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if (s_arr < 0).any():
        raise DomainError("phi_B requires s >= 0")
    x = np.sqrt(2.0 * s_arr)
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small]
    x2 = xs * xs
    out[small] = np.log1p(x2 / 6.0 + x2 * x2 / 120.0)
    xl = x[~small]
    # log(sinh x / x) = x + log1p(-exp(-2x)) - log(2x)
    out[~small] = xl + np.log1p(-np.exp(-2.0 * xl)) - np.log(2.0 * xl)
    return -0.5 * out


def phi_B(s) -> float | np.ndarray:
    """mgf of the continuous-limit denominator variable B; phi_B(0) = 1."""
    out = np.exp(log_phi_B(s))
    s_arr = np.asarray(s)
    return float(out[0]) if s_arr.ndim == 0 else out
