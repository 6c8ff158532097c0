"""Bridge kernel matrix, its spectrum, and the alternative characteristic polynomial.

The (n-1)x(n-1) matrix ``K_n = { min(j,k)/n - jk/n^2 }`` is the grid
discretization of the Brownian-bridge covariance ``min(s,t) - st``.  Its
"alternative characteristic polynomial" is

    d_n(lambda) = det(I - lambda K_n) = prod_j (1 - lambda_j lambda),

which admits a closed two-power/binomial form.  Three mutually checking
evaluation backends live here:

* ``dn_explicit``  -- the closed finite-sum form, valid for all real lambda;
* ``dn_oracle``    -- pivoted-LU determinant of ``I - lambda K_n``;
* the spectral product through ``eigen_spectrum``.

On the negative half-axis (the only region quadrature ever touches) the
specialized ``dn_neg``/``dn_neg_prime`` use an all-positive-terms sum near the
removable singularity at 0 and a two-power representation elsewhere, switching
to log space before ``f^n`` overflows.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError

__all__ = [
    "BuildMode",
    "KernelContext",
    "build_kernel_matrix",
    "eigen_spectrum",
    "dn_explicit",
    "dn_oracle",
    "dn_neg",
    "dn_neg_prime",
    "dn_neg_log",
    "dn_neg_logderiv",
    "trace_identity",
    "save_context",
    "load_context",
    "cached_context",
]

CACHE_ENV_VAR = "YULE_CACHE_DIR"

# s*n below this uses the all-positive binomial sum; above it the two-power
# form is already cancellation-free (relative error ~ eps/(s*n)).  The
# threshold is wider than the bare removable-singularity window on purpose.
_POLY_BRANCH_SN = 1.0
# two-power branch switches to log space when n*log(f) exceeds this
_LOG_SPACE_Y = 300.0


class BuildMode(str, enum.Enum):
    EXPLICIT_FORMULA = "explicit_formula"
    DETERMINANT_LU = "determinant_lu"
    SPECTRAL = "spectral"


def build_kernel_matrix(n: int) -> np.ndarray:
    """Dense symmetric ``K_n`` with entries min(j,k)/n - jk/n^2, 1-based j,k."""
    if n < 2:
        raise DomainError(f"walk length must be >= 2, got {n}")
    j = np.arange(1, n, dtype=np.float64)
    return np.minimum.outer(j, j) / n - np.outer(j, j) / (n * n)


@dataclass(frozen=True)
class KernelContext:
    """Immutable per-n bundle of the kernel spectrum.

    ``eigenvalues`` are strictly positive and sorted descending; safe for
    concurrent shared reads.
    """

    n: int
    eigenvalues: np.ndarray
    build_mode: BuildMode = BuildMode.SPECTRAL

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dim(self) -> int:
        return self.n - 1

    @classmethod
    def build(cls, n: int, build_mode: BuildMode = BuildMode.SPECTRAL) -> "KernelContext":
        matrix = build_kernel_matrix(n)
        try:
            ev = np.linalg.eigvalsh(matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigen-solver failed for n={n}: {exc}", n=n) from exc
        ev = np.sort(ev)[::-1].copy()
        if ev[-1] <= 0.0:
            raise NumericError(f"non-positive eigenvalue for n={n}: {ev[-1]}", n=n)
        return cls(n=n, eigenvalues=ev, build_mode=BuildMode(build_mode))

    # -- spectral context protocol shared with the continuous spectrum -------
    #
    # Both methods are axis-separable on purpose: quadrature cells carry
    # tensor grids, so per-axis log sums plus a (na, nlam) @ (nlam, nb)
    # contraction beat any pointwise evaluation by orders of magnitude.

    def half_log_dn(self, s):
        """h(s) = sum_j log(1 + s lam_j) = log d_n(-s), vectorized over s."""
        lam = self.eigenvalues
        a = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return np.log1p(np.multiply.outer(a, lam)).sum(axis=-1)

    def ratio_power_tensor(self, a, b, pmax: int) -> np.ndarray:
        """S_p[i, j] = sum_k (lam_k^2 / ((1 + a_i lam_k)(1 + b_j lam_k)))^p.

        p runs 1..pmax; result has shape (pmax, len(a), len(b)).
        """
        lam = self.eigenvalues
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        xa = (lam * lam) / (1.0 + np.multiply.outer(a, lam))  # (na, nlam)
        yb = 1.0 / (1.0 + np.multiply.outer(b, lam))          # (nb, nlam)
        out = np.empty((pmax, a.shape[0], b.shape[0]))
        xp, yp = xa, yb
        out[0] = xp @ yp.T
        for p in range(1, pmax):
            xp = xp * xa
            yp = yp * yb
            out[p] = xp @ yp.T
        return out


def eigen_spectrum(ctx: KernelContext) -> np.ndarray:
    """Eigenvalues of K_n, descending, all strictly positive."""
    return ctx.eigenvalues


def trace_identity(n: int) -> float:
    """trace(K_n) = (n^2 - 1)/(6n)."""
    return (n * n - 1.0) / (6.0 * n)


# ---------------------------------------------------------------------------
# d_n on the whole real line
# ---------------------------------------------------------------------------

def dn_explicit(n: int, lam: float) -> float:
    """Closed-form d_n(lambda), total on the reals.

    Uses the two-power form when (lambda/n - 2)^2 - 4 is safely away from 0
    (a trigonometric rewrite inside the oscillatory band 0 < lambda < 4n) and
    the binomial finite sum otherwise.
    """
    if n < 2:
        raise DomainError(f"walk length must be >= 2, got {n}")
    lam = float(lam)
    w = lam / n - 2.0
    disc = (lam / n) * (lam / n - 4.0)  # (w-2)(w+2), cancellation-free
    if abs(disc) < 1e-8 * w * w or (lam <= 0.0 and -lam * n <= _POLY_BRANCH_SN):
        return _dn_binomial_sum(n, lam)
    if disc > 0.0:
        rt = np.sqrt(disc)
        a = -(w - rt) / 2.0
        b = -(w + rt) / 2.0
        if max(abs(a), abs(b)) > 1.0:
            big, small = (a, b) if abs(a) >= abs(b) else (b, a)
            y = n * np.log(abs(big))
            if y > _LOG_SPACE_Y:
                # a*b = 1, so the small power is negligible at this scale
                sign = 1.0 if big > 0 or n % 2 == 0 else -1.0
                lead = 1.0 if abs(a) >= abs(b) else -1.0
                return lead * sign * float(np.exp(y - np.log(n * rt)))
        return float((a ** n - b ** n) / (n * rt))
    # conjugate pair of modulus one: d_n = 2 sin(n phi) / (n sqrt(4 - w^2))
    rt = np.sqrt(-disc)
    phi = np.arctan2(rt / 2.0, -w / 2.0)
    return float(2.0 * np.sin(n * phi) / (n * rt))


def _dn_binomial_sum(n: int, lam: float) -> float:
    """Finite binomial sum for d_n(lambda); exact for every real lambda.

    Terms are accumulated through a ratio recursion so no individual binomial
    coefficient is ever materialized; safe up to n in the thousands whenever
    |disc| is small (the only regime this branch serves).
    """
    w = lam / n - 2.0
    disc = (lam / n) * (lam / n - 4.0)
    sign = -1.0 if n % 2 == 0 else 1.0  # (-1)^(n-1)
    # T_k = C(n, 2k-1) w^(n-2k+1) disc^(k-1) / (n 2^(n-1)); T_1 = (w/2)^(n-1)
    if w == 0.0:
        return 0.0 if n % 2 == 0 else sign * float(
            _binomial_tail_term(n, disc))
    t = float(np.exp((n - 1) * np.log(abs(w) / 2.0)))
    t *= np.sign(w) ** ((n - 1) % 2)
    total = t
    ratio_x = disc / (w * w)
    k = 1
    while 2 * k + 1 <= n:
        rho = (n - 2 * k + 1) * (n - 2 * k) / ((2.0 * k) * (2 * k + 1))
        t = t * rho * ratio_x
        total += t
        k += 1
        if abs(t) < 1e-22 * abs(total) and k > 3:
            break
    return sign * total


def _binomial_tail_term(n: int, disc: float) -> float:
    # w == 0 leaves only the k = (n+1)/2 term for odd n
    k = (n + 1) // 2
    from math import comb

    return comb(n, 2 * k - 1) * disc ** (k - 1) / (n * 2.0 ** (n - 1))


def dn_oracle(n: int, lam: float) -> float:
    """det(I - lambda K_n) through pivoted LU factorization."""
    if n < 2:
        raise DomainError(f"walk length must be >= 2, got {n}")
    matrix = np.eye(n - 1) - lam * build_kernel_matrix(n)
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    diag = np.diag(lu)
    sign = 1.0 if (piv != np.arange(n - 1)).sum() % 2 == 0 else -1.0
    sign *= np.prod(np.sign(diag))
    logdet = np.sum(np.log(np.abs(diag)))
    value = sign * np.exp(logdet)
    if not np.isfinite(value):
        raise NumericError(
            f"determinant overflow for n={n}, lambda={lam}", n=n)
    return float(value)


# ---------------------------------------------------------------------------
# d_n(-s), d_n'(-s) for s >= 0 (the quadrature half-axis)
# ---------------------------------------------------------------------------

def _dn_neg_poly_pair(n: int, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P, P') with P(s) = d_n(-s), via the all-positive-terms binomial sum.

    Every term of the sum is nonnegative for s >= 0 so the accumulation is
    cancellation-free; the recursion carries term ratios only.  Intended for
    s*n of order 1 or below, where it converges in a handful of terms.
    """
    s = np.asarray(s, dtype=np.float64)
    u = s / n + 2.0
    q = s * (s + 4.0 * n) / (n * n)
    t = np.exp((n - 1) * np.log1p(s / (2.0 * n)))  # (u/2)^(n-1)
    total = t.copy()
    totalp = t * (n - 1) / (u * n)
    k = 1
    while 2 * k + 1 <= n:
        rho = (n - 2 * k + 1) * (n - 2 * k) / ((2.0 * k) * (2 * k + 1))
        tv = t * (rho * k) / (u * u)
        t = t * rho * (q / (u * u))
        k += 1
        e = n - (2 * k - 1)
        total += t
        totalp += t * e / (u * n) + tv * (2.0 * s + 4.0 * n) / (n * n)
        if k > 3 and np.all(t < 1e-22 * total):
            break
    return total, totalp


def _two_power_y(n: int, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """y = n log f(s/n), sqrt(Delta), Delta for the f-representation.

    f(x) = ((x+2) + sqrt((x+2)^2 - 4))/2 and Delta = (s/n)(s/n + 4).
    Computed through log1p so no accuracy is lost as s -> 0.
    """
    x = np.asarray(s, dtype=np.float64) / n
    delta = x * (x + 4.0)
    rt = np.sqrt(delta)
    y = n * np.log1p((x + rt) / 2.0)
    return y, rt, delta


def dn_neg(n: int, s) -> float | np.ndarray:
    """d_n(-s) for s >= 0.  Always >= 1; returns inf past the double range."""
    s_arr, scalar = _as_nonneg_array(s)
    y, rt, _ = _two_power_y(n, s_arr)
    out = np.empty_like(s_arr)
    poly = s_arr * n <= _POLY_BRANCH_SN
    if poly.any():
        out[poly] = _dn_neg_poly_pair(n, s_arr[poly])[0]
    rest = ~poly
    if rest.any():
        yr, rtr = y[rest], rt[rest]
        big = yr > _LOG_SPACE_Y
        vals = np.empty_like(yr)
        with np.errstate(over="ignore"):
            vals[~big] = 2.0 * np.sinh(yr[~big]) / (n * rtr[~big])
            vals[big] = np.exp(yr[big] - np.log(n * rtr[big]))
        out[rest] = vals
    return float(out[0]) if scalar else out


def dn_neg_log(n: int, s) -> float | np.ndarray:
    """log d_n(-s) for s >= 0, finite for all representable s."""
    s_arr, scalar = _as_nonneg_array(s)
    y, rt, _ = _two_power_y(n, s_arr)
    out = np.empty_like(s_arr)
    poly = s_arr * n <= _POLY_BRANCH_SN
    if poly.any():
        out[poly] = np.log(_dn_neg_poly_pair(n, s_arr[poly])[0])
    rest = ~poly
    if rest.any():
        yr = y[rest]
        # log(2 sinh y) = y + log1p(-exp(-2y))
        out[rest] = yr + np.log1p(-np.exp(-2.0 * yr)) - np.log(n * rt[rest])
    return float(out[0]) if scalar else out


def dn_neg_prime(n: int, s) -> float | np.ndarray:
    """d_n'(-s) (derivative of d_n at the point -s) for s >= 0."""
    s_arr, scalar = _as_nonneg_array(s)
    out = np.empty_like(s_arr)
    poly = s_arr * n <= _POLY_BRANCH_SN
    if poly.any():
        # d/ds d_n(-s) = -d_n'(-s)
        out[poly] = -_dn_neg_poly_pair(n, s_arr[poly])[1]
    rest = ~poly
    if rest.any():
        sr = s_arr[rest]
        y, rt, delta = _two_power_y(n, sr)
        u = sr / n + 2.0
        big = y > _LOG_SPACE_Y
        vals = np.empty_like(sr)
        with np.errstate(over="ignore"):
            nb = ~big
            f_pow = np.exp(y[nb])
            diff = f_pow - 1.0 / f_pow
            summ = f_pow + 1.0 / f_pow
            vals[nb] = (u[nb] / (n * n * rt[nb] ** 3) * diff
                        - summ / (n * delta[nb]))
            # at log scale the f^-n parts vanish; both terms share e^y
            eb = np.exp(y[big] - np.log(n * delta[big]))
            vals[big] = eb * (u[big] / (n * rt[big]) - 1.0)
        out[rest] = vals
    return float(out[0]) if scalar else out


def dn_neg_logderiv(n: int, s) -> float | np.ndarray:
    """g~(s) = -d_n'(-s)/d_n(-s) = sum_j lam_j / (1 + s lam_j), s >= 0.

    Positive and decreasing; g~(0) equals trace(K_n).  The two-power form
    has a removable 1/(2s) pole pair that the polynomial branch sidesteps.
    """
    s_arr, scalar = _as_nonneg_array(s)
    out = np.empty_like(s_arr)
    poly = s_arr * n <= _POLY_BRANCH_SN
    if poly.any():
        p, pp = _dn_neg_poly_pair(n, s_arr[poly])
        out[poly] = pp / p
    rest = ~poly
    if rest.any():
        sr = s_arr[rest]
        y, rt, delta = _two_power_y(n, sr)
        u = sr / n + 2.0
        out[rest] = 1.0 / (np.tanh(y) * rt) - u / (n * delta)
    return float(out[0]) if scalar else out


def _as_nonneg_array(s) -> tuple[np.ndarray, bool]:
    arr = np.asarray(s, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if (arr < 0).any():
        raise DomainError("s must be >= 0; use dn_explicit for general lambda")
    return arr, scalar


# ---------------------------------------------------------------------------
# JSON cache
# ---------------------------------------------------------------------------

def _cache_path(cache_dir: str | os.PathLike, n: int) -> str:
    return os.path.join(os.fspath(cache_dir), f"kernel_{n}.json")


def save_context(ctx: KernelContext, cache_dir: str | os.PathLike) -> str:
    """Write {n, eigenvalues[]} to kernel_<n>.json; returns the path."""
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, ctx.n)
    doc = {"n": ctx.n, "eigenvalues": [float(v) for v in ctx.eigenvalues]}
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def load_context(path: str | os.PathLike) -> KernelContext:
    with open(path) as fh:
        doc = json.load(fh)
    ev = np.asarray(doc["eigenvalues"], dtype=np.float64)
    return KernelContext(n=int(doc["n"]), eigenvalues=ev)


def cached_context(n: int, cache_dir: str | os.PathLike | None = None) -> KernelContext:
    """Load kernel_<n>.json if present, else build (and cache when a dir is set).

    ``cache_dir`` defaults to the YULE_CACHE_DIR environment variable.
    """
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV_VAR)
    if cache_dir:
        path = _cache_path(cache_dir, n)
        if os.path.exists(path):
            return load_context(path)
    ctx = KernelContext.build(n)
    if cache_dir:
        save_context(ctx, cache_dir)
    return ctx
