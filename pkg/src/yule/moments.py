"""Even moments of the empirical correlation and negative moments of B.

The m-th moment (even m) is the double integral

    E[theta_n^m] = (1/(2^m Gamma(m/2)^2))
                   * int int s11^(m/2-1) s22^(m/2-1)
                     d^m phi / d s12^m (s11, 0, s22) ds11 ds22

over the first quadrant, here mapped to the unit square by s = t/(1-t) on
each axis and evaluated with adaptive tensor Gauss-Kronrod cells.  Two
backends cover m = 2: the series/spectral integrand (works for all even m)
and the closed form built from d_n(-s) and its log-derivative, which needs no
spectrum away from the diagonal.

Negative moments use the Laplace identity
E[X^-m] = (1/(m-1)!) int s^(m-1) E[e^{-sX}] ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DivergenceError, DomainError
from .kernel import KernelContext, cached_context, dn_neg_log, dn_neg_logderiv
from .quadrature import integrate_1d, integrate_2d
from .series import exp_coefficients

__all__ = [
    "CONTINUOUS",
    "ContinuousSpectrum",
    "MomentRequest",
    "MomentResult",
    "moment",
    "second_moment_closed_form",
    "negative_moment",
    "resolve_context",
]

# fraction of (1 + s11) within which the closed-form divided difference is
# replaced by the series integrand (it loses half its digits on the diagonal)
DIAGONAL_BAND = 1e-4

_T_CLAMP = 1.0 - 1e-12  # keeps s = t/(1-t) finite at cell corners


class _ContinuousSentinel:
    """Marker for the Wiener-limit spectrum in MomentRequest.n."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CONTINUOUS"


CONTINUOUS = _ContinuousSentinel()


class ContinuousSpectrum:
    """Spectral context for the Brownian-bridge operator, lam_k = 1/(k pi)^2.

    The spectrum is truncated at ``terms`` eigenvalues; the dropped tail of
    the log-product and of the first power sum is restored by closed-form
    integrals plus the leading Euler-Maclaurin correction at the midpoint
    K + 1/2.  Tails of power sums with p >= 2 fall off like K^(1-8p) and are
    far below double precision already at the default truncation.
    """

    def __init__(self, terms: int = 200):
        if terms < 8:
            raise DomainError("continuous spectrum needs at least 8 terms")
        self.terms = terms
        k = np.arange(1, terms + 1, dtype=np.float64)
        self.eigenvalues = 1.0 / (k * np.pi) ** 2
        self._cutoff = terms + 0.5

    # -- spectral context protocol -------------------------------------

    def half_log_dn(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        lam = self.eigenvalues
        main = np.log1p(np.multiply.outer(s, lam)).sum(axis=-1)
        return main + self._log_tail(s)

    def _log_tail(self, s):
        x = self._cutoff
        a2 = s / np.pi ** 2
        a = np.sqrt(a2)
        integral = 2.0 * a * np.arctan2(a, x) - x * np.log1p(a2 / (x * x))
        correction = -2.0 * a2 / (x * (x * x + a2)) / 24.0
        return integral + correction

    def ratio_power_tensor(self, a, b, pmax):
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        lam = self.eigenvalues
        xa = (lam * lam) / (1.0 + np.multiply.outer(a, lam))
        yb = 1.0 / (1.0 + np.multiply.outer(b, lam))
        out = np.empty((pmax, a.shape[0], b.shape[0]))
        xp, yp = xa, yb
        out[0] = xp @ yp.T + self._s1_tail(a[:, None], b[None, :])
        for p in range(1, pmax):
            xp = xp * xa
            yp = yp * yb
            out[p] = xp @ yp.T
        return out

    def _s1_tail(self, a, b):
        """int_X^inf dx / ((pi^2 x^2 + a)(pi^2 x^2 + b)) + EM correction."""
        x = self._cutoff
        pix = np.pi * x

        def antiderivative(c):
            # int_X^inf dx/(pi^2 x^2 + c); c = 0 limit is 1/(pi^2 X)
            c = np.asarray(c, dtype=np.float64)
            sc = np.sqrt(c)
            with np.errstate(invalid="ignore", divide="ignore"):
                val = np.arctan2(sc, pix) / (np.pi * sc)
            return np.where(c > 0.0, val, 1.0 / (np.pi ** 2 * x))

        a_b, b_b = np.broadcast_arrays(a, b)
        diff = b_b - a_b
        near = np.abs(diff) <= 1e-8 * (a_b + b_b) + 1e-300
        safe_diff = np.where(near, 1.0, diff)
        off = (antiderivative(a_b) - antiderivative(b_b)) / safe_diff
        cbar = 0.5 * (a_b + b_b)
        sc = np.sqrt(np.where(cbar > 0, cbar, 1.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            diag = 0.5 / (np.pi * cbar) * (np.arctan2(sc, pix) / sc
                                           - pix / (pix * pix + cbar))
        diag = np.where(cbar > 0, diag, 1.0 / (3.0 * np.pi ** 4 * x ** 3))
        integral = np.where(near, diag, off)
        pa = np.pi ** 2 * x * x + a_b
        pb = np.pi ** 2 * x * x + b_b
        correction = -2.0 * np.pi ** 2 * x * (1.0 / (pa * pa * pb)
                                              + 1.0 / (pa * pb * pb)) / 24.0
        return integral + correction


@dataclass(frozen=True)
class MomentRequest:
    """Order-m moment of theta_n; n is a walk length or CONTINUOUS."""

    n: object
    m: int
    rel_tol: float = 1e-7
    max_subdivisions: int = 2_000_000

    def __post_init__(self):
        if self.n is not CONTINUOUS:
            if not isinstance(self.n, (int, np.integer)) or self.n < 2:
                raise DomainError(f"n must be an integer >= 2 or CONTINUOUS, got {self.n!r}")
        if not isinstance(self.m, (int, np.integer)) or self.m < 0:
            raise DomainError(f"moment order must be a nonnegative integer, got {self.m!r}")
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be positive")


@dataclass(frozen=True)
class MomentResult:
    value: float
    abs_error_estimate: float
    cells_used: int
    backend: str
    exact: bool = False


def resolve_context(n, cache_dir=None, continuous_terms: int = 200):
    """KernelContext for an integer n, ContinuousSpectrum for CONTINUOUS."""
    if n is CONTINUOUS:
        return ContinuousSpectrum(terms=continuous_terms)
    return cached_context(int(n), cache_dir)


def _check_tail_guard(n, m):
    """Decay guard for the order-m integrand; n = 2, m = 2 is the one
    boundary case admitted by an exact two-point argument."""
    if n == 2:
        if m != 2:
            raise DomainError("n = 2 is permitted only for the second moment")
        return
    if n - m + 1 <= 2:
        raise DivergenceError(
            f"integrand decay (n - m + 1 = {n - m + 1}) insufficient for "
            f"order {m} at n = {n}", n=n)


def _mapped_nodes(tn):
    t = np.minimum(tn, _T_CLAMP)
    s = t / (1.0 - t)
    jac = 1.0 / (1.0 - t) ** 2
    return s, jac


def _series_integrand(ctx, m):
    """Tensor-cell integrand for the series/spectral backend."""
    half = m // 2
    norm = math.factorial(m) / (2.0 ** m * math.gamma(half) ** 2)
    power = half - 1

    def f(xn, yn):
        a, ja = _mapped_nodes(xn)   # (B, 15)
        b, jb = _mapped_nodes(yn)
        batch, width = a.shape
        ha = ctx.half_log_dn(a.ravel()).reshape(batch, width)
        hb = ctx.half_log_dn(b.ravel()).reshape(batch, width)
        log_coeffs = np.empty((half + 1, batch, width, width))
        log_coeffs[0] = -0.5 * (ha[:, :, None] + hb[:, None, :])
        for i in range(batch):
            sums = ctx.ratio_power_tensor(a[i], b[i], half)
            for p in range(1, half + 1):
                log_coeffs[p][i] = 0.5 * sums[p - 1] / p
        coeff = exp_coefficients(log_coeffs)[half]
        if power != 0:
            weight = (a ** power * ja)[:, :, None] * (b ** power * jb)[:, None, :]
        else:
            weight = ja[:, :, None] * jb[:, None, :]
        return norm * coeff * weight

    return f


def moment(req: MomentRequest, ctx=None, workers: int = 1) -> MomentResult:
    """E[theta_n^m] by the series/spectral backend.

    Odd orders are exactly zero (the joint law is symmetric under flipping
    one walk); order zero is identically one.  Raises ConvergenceError with
    the partial result attached if the cell budget is exhausted first.
    """
    backend = "series_spectral"
    if req.m % 2 == 1:
        return MomentResult(0.0, 0.0, 0, backend, exact=True)
    if req.m == 0:
        return MomentResult(1.0, 0.0, 0, backend, exact=True)
    if req.n is not CONTINUOUS:
        _check_tail_guard(int(req.n), req.m)
    if ctx is None:
        ctx = resolve_context(req.n)
    outcome = integrate_2d(
        _series_integrand(ctx, req.m),
        rel_tol=req.rel_tol,
        max_cells=req.max_subdivisions,
        workers=workers,
    )
    result = MomentResult(outcome.value, outcome.error, outcome.cells, backend)
    if not outcome.converged:
        raise ConvergenceError(
            f"moment quadrature did not reach rel_tol={req.rel_tol} within "
            f"{req.max_subdivisions} cells", partial=result)
    return result


def _closed_form_integrand(ctx: KernelContext):
    n = ctx.n

    def f(xn, yn):
        a, ja = _mapped_nodes(xn)
        b, jb = _mapped_nodes(yn)
        batch, width = a.shape
        log_da = dn_neg_log(n, a.ravel()).reshape(batch, width)
        log_db = dn_neg_log(n, b.ravel()).reshape(batch, width)
        ga = dn_neg_logderiv(n, a.ravel()).reshape(batch, width)
        gb = dn_neg_logderiv(n, b.ravel()).reshape(batch, width)
        phi = np.exp(-0.5 * (log_da[:, :, None] + log_db[:, None, :]))
        diff = b[:, None, :] - a[:, :, None]
        near = np.abs(diff) < DIAGONAL_BAND * (1.0 + a[:, :, None])
        safe = np.where(near, 1.0, diff)
        dd = (ga[:, :, None] - gb[:, None, :]) / safe
        if near.any():
            for i in np.nonzero(near.any(axis=(1, 2)))[0]:
                exact = ctx.ratio_power_tensor(a[i], b[i], 1)[0]
                dd[i] = np.where(near[i], exact, dd[i])
        weight = ja[:, :, None] * jb[:, None, :]
        return 0.25 * phi * dd * weight

    return f


def second_moment_closed_form(ctx: KernelContext, rel_tol: float = 1e-7,
                              max_subdivisions: int = 2_000_000,
                              workers: int = 1) -> MomentResult:
    """E[theta_n^2] from the d_n / d_n' closed form.

    The integrand is the divided difference of the log-derivative of
    d_n(-s) weighted by the joint mgf; inside a relative band of width
    DIAGONAL_BAND around the diagonal the series-route integrand (exact
    there) is substituted for the cancellation-prone difference quotient.
    """
    backend = "closed_form_theorem2"
    outcome = integrate_2d(
        _closed_form_integrand(ctx),
        rel_tol=rel_tol,
        max_cells=max_subdivisions,
        workers=workers,
    )
    result = MomentResult(outcome.value, outcome.error, outcome.cells, backend)
    if not outcome.converged:
        raise ConvergenceError(
            f"closed-form quadrature did not reach rel_tol={rel_tol} within "
            f"{max_subdivisions} cells", partial=result)
    return result


def _tail_exponent_probe(mgf, m: int) -> None:
    """Raise DivergenceError unless s^(m-1) mgf(s) has an integrable tail.

    Probes the local decay exponent of the mgf on a geometric grid; an
    exponent settling at or below m means the Laplace integral cannot
    converge (underflow to zero counts as super-polynomial decay).
    """
    s_probe = 10.0 ** np.arange(3, 10)
    vals = np.asarray([float(mgf(np.asarray([s]))[0]) if _wants_array(mgf)
                       else float(mgf(s)) for s in s_probe])
    if (vals == 0.0).any():
        return  # decayed below double range: integrable
    slopes = -np.diff(np.log(vals)) / np.log(10.0)
    if slopes[-1] <= m + 0.25 and slopes[-2] <= m + 0.25:
        raise DivergenceError(
            f"mgf tail decays like s^-{slopes[-1]:.2f}; "
            f"s^{m - 1}-weighted integral diverges")


def _wants_array(mgf):
    try:
        out = mgf(np.asarray([1.0]))
    except Exception:
        return False
    return np.asarray(out).shape == (1,)


def negative_moment(mgf, m: int, rel_tol: float = 1e-9,
                    max_subdivisions: int = 500_000,
                    workers: int = 1) -> float:
    """E[X^-m] = (1/(m-1)!) int_0^inf s^(m-1) mgf(s) ds.

    ``mgf`` must be vectorized over numpy arrays of s >= 0.  Raises
    DivergenceError when the tail probe shows the integrand is not
    integrable (e.g. B_2, whose mgf decays only like s^-1/2).
    """
    if m < 1:
        raise DomainError("negative moment order must be >= 1")
    _tail_exponent_probe(mgf, m)
    vectorized = _wants_array(mgf)
    fact = math.factorial(m - 1)

    def f(tn):
        t = np.minimum(tn, _T_CLAMP)
        s = t / (1.0 - t)
        jac = 1.0 / (1.0 - t) ** 2
        shape = s.shape
        flat = s.ravel()
        phi = mgf(flat) if vectorized else np.asarray([mgf(v) for v in flat])
        phi = np.asarray(phi, dtype=np.float64).reshape(shape)
        with np.errstate(invalid="ignore"):
            out = s ** (m - 1) * phi * jac / fact
        return np.nan_to_num(out, nan=0.0, posinf=0.0)

    outcome = integrate_1d(f, 0.0, 1.0, rel_tol=rel_tol,
                           max_cells=max_subdivisions, workers=workers)
    if not outcome.converged:
        raise DivergenceError(
            f"negative-moment quadrature stalled at error "
            f"{outcome.error:.3e} for value {outcome.value:.6e}")
    return outcome.value
