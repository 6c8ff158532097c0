"""Machine-checkable constants behind the O(1/n) coupling bound.

C1..C3 are negative moments of the limit denominator variable B, evaluated
through the Laplace identity against the sinh-form mgf.  C4 bounds
sup_{n>=11} E[B_n^{-1}]: the scan computes every E[B_n^{-1}] directly while
the certified value is the analytic envelope

    1 + int_1^inf ((e^sqrt(s/2) - e^-sqrt(s/2)) / sqrt(10 s))^{-1/2} ds
      + sup_{n>=11} (1/3) C(n,11)^{-1/2} n^{5/2},

whose n-dependent term attains its supremum at n = 11.  C5 combines the
constants into the explicit Wasserstein ceiling used by the rate experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, NumericError
from .kernel import dn_neg_log
from .mgf import phi_B
from .moments import negative_moment
from .quadrature import integrate_1d

__all__ = [
    "BoundReport",
    "compute_Cm",
    "envelope_integral",
    "compute_C4",
    "compute_C5",
    "check_dn_lower_bounds",
    "build_bound_report",
]

_SLACK = 1e-12


def _phi_bn(n: int):
    return lambda s: np.exp(-0.5 * dn_neg_log(n, 2.0 * np.asarray(s) / n))


def compute_Cm(m: int, rel_tol: float = 1e-9) -> float:
    """E[B^-m] for m in {1, 2, 3} via the Laplace identity."""
    if m not in (1, 2, 3):
        raise DomainError(f"only m in 1..3 is used by the bound, got {m}")
    return negative_moment(phi_B, m, rel_tol=rel_tol)


def envelope_integral(rel_tol: float = 1e-10) -> float:
    """int_1^inf ((e^sqrt(s/2) - e^-sqrt(s/2))/sqrt(10 s))^{-1/2} ds.

    Substituting s = t^2/2 linearizes the exponential scale: the integrand
    becomes (2 sinh(t/2) / (sqrt(5) t))^{-1/2} t on t >= sqrt(2), mapped to
    the unit interval for the adaptive pass.
    """
    t0 = math.sqrt(2.0)

    def f(un):
        u = np.minimum(un, 1.0 - 1e-12)
        t = t0 + u / (1.0 - u)
        jac = 1.0 / (1.0 - u) ** 2
        log_core = np.log(2.0 * np.sinh(t / 2.0)) - np.log(np.sqrt(5.0) * t)
        return np.exp(-0.5 * log_core) * t * jac

    out = integrate_1d(f, 0.0, 1.0, rel_tol=rel_tol)
    if not out.converged:
        raise NumericError("envelope integral did not converge")
    return out.value


def _envelope_third_term(n: int) -> float:
    return float(n ** 2.5 / (3.0 * math.sqrt(math.comb(n, 11))))


def compute_C4(n_scan_max: int = 500, rel_tol: float = 1e-9) -> dict:
    """Envelope constant plus a belt-and-suspenders scan of E[B_n^{-1}].

    Returns the certified envelope value, the scanned maximum, and the
    integral part of the envelope.  Raises NumericError if any scanned value
    escapes its per-n envelope, and checks the n-dependent term really
    decreases past 11.
    """
    if n_scan_max < 11:
        raise DomainError("n_scan_max must be >= 11")
    env_int = envelope_integral()
    scanned = {}
    for n in range(11, n_scan_max + 1):
        value = negative_moment(_phi_bn(n), 1, rel_tol=rel_tol)
        bound = 1.0 + env_int + _envelope_third_term(n)
        if value > bound:
            raise NumericError(
                f"scanned E[B_n^-1] = {value} exceeds envelope {bound} at n={n}", n=n)
        scanned[n] = value
    thirds = [_envelope_third_term(n) for n in range(11, n_scan_max + 1)]
    if any(b > a for a, b in zip(thirds, thirds[1:])):
        raise NumericError("envelope third term failed to decrease past n=11")
    c4 = 1.0 + env_int + thirds[0]
    return {
        "C4": c4,
        "scanned_max": max(scanned.values()),
        "scanned_argmax": max(scanned, key=scanned.get),
        "envelope_integral": env_int,
        "n_scan_max": n_scan_max,
    }


def compute_C5(c1: float, c3: float, c4: float) -> float:
    """Explicit Wasserstein constant from C1, C3, C4."""
    root = math.sqrt(2.5 * (c3 + c4))
    return (1.0 / 12.0) * ((1.0 / 132.0) * root + 2.0) * root \
        + (1.0 / 6.0) * math.sqrt(2.5) * c1


def _lower_bound_exp(s: np.ndarray) -> np.ndarray:
    """(e^sqrt(s/2) - e^-sqrt(s/2)) / sqrt(10 s) with its s -> 0 limit."""
    x = np.sqrt(s / 2.0)
    out = np.full_like(s, 2.0 / math.sqrt(20.0))
    pos = x > 0
    out[pos] = 2.0 * np.sinh(x[pos]) / (math.sqrt(20.0) * x[pos])
    return out


def check_dn_lower_bounds(n_list, s_grid=None, points: int = 1000) -> dict:
    """Verify the three lower bounds on d_n(-2s/n) for each n >= 11.

    (a) d_n(-2s/n) >= 1 for s >= 0;
    (b) d_n(-2s/n) >= 2^5 C(n,11) n^-11 s^5;
    (c) d_n(-2s/n) >= (e^sqrt(s/2) - e^-sqrt(s/2))/sqrt(10 s) on [0, n^2/2].

    Checks run on the supplied grid (default: `points` equispaced values on
    [0, n^2/2]) with a 1e-12 slack; the result maps clause names to booleans
    and records the first violation if any.
    """
    results = {}
    for n in n_list:
        if n < 11:
            raise DomainError(f"lower bounds hold for n >= 11 only, got {n}")
        grid = (np.asarray(s_grid, dtype=np.float64) if s_grid is not None
                else np.linspace(0.0, n * n / 2.0, points))
        d = np.exp(dn_neg_log(n, 2.0 * grid / n))
        slack = _SLACK * (1.0 + np.abs(d))

        ok_a = bool(np.all(d >= 1.0 - slack))
        bound_b = 32.0 * float(math.comb(n, 11)) * float(n) ** -11 * grid ** 5
        ok_b = bool(np.all(d >= bound_b - _SLACK * (1.0 + bound_b)))
        inside = grid <= n * n / 2.0
        bound_c = _lower_bound_exp(grid[inside])
        ok_c = bool(np.all(d[inside] >= bound_c - _SLACK * (1.0 + bound_c)))

        results[f"dn_ge_one[n={n}]"] = ok_a
        results[f"dn_ge_s5_term[n={n}]"] = ok_b
        results[f"dn_ge_exp_envelope[n={n}]"] = ok_c
        for clause, ok, bound in (("a", ok_a, np.ones_like(d)),
                                  ("b", ok_b, bound_b),
                                  ("c", ok_c, None)):
            if not ok:
                if clause == "c":
                    viol = grid[inside][d[inside] < bound_c - _SLACK]
                else:
                    viol = grid[d < bound - _SLACK]
                raise NumericError(
                    f"lower-bound clause ({clause}) fails at n={n}, "
                    f"s={viol[0]:.6g}", n=n)
    return results


@dataclass(frozen=True)
class BoundReport:
    """Constants C1..C5 with the evidence and inputs behind them."""

    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    n_scan_max: int
    scanned_max: float
    scanned_argmax: int
    envelope_integral: float
    lemma_checks: dict = field(default_factory=dict)
    rel_tol: float = 1e-9
    lemma_grid_points: int = 1000

    def to_dict(self) -> dict:
        return {
            "C1": self.C1, "C2": self.C2, "C3": self.C3,
            "C4": self.C4, "C5": self.C5,
            "n_scan_max": self.n_scan_max,
            "scanned_max_E_Bn_inverse": self.scanned_max,
            "scanned_argmax": self.scanned_argmax,
            "envelope_integral": self.envelope_integral,
            "lemma_checks": dict(self.lemma_checks),
            "inputs": {"rel_tol": self.rel_tol,
                       "lemma_grid_points": self.lemma_grid_points},
        }


def build_bound_report(n_scan_max: int = 500, rel_tol: float = 1e-9,
                       lemma_ns=(11, 20, 50, 200),
                       lemma_grid_points: int = 1000) -> BoundReport:
    """Compute every constant and lemma check in one pass."""
    c1 = compute_Cm(1, rel_tol)
    c2 = compute_Cm(2, rel_tol)
    c3 = compute_Cm(3, rel_tol)
    c4_info = compute_C4(n_scan_max, rel_tol)
    c5 = compute_C5(c1, c3, c4_info["C4"])
    checks = check_dn_lower_bounds(lemma_ns, points=lemma_grid_points)
    return BoundReport(
        C1=c1, C2=c2, C3=c3, C4=c4_info["C4"], C5=c5,
        n_scan_max=n_scan_max,
        scanned_max=c4_info["scanned_max"],
        scanned_argmax=c4_info["scanned_argmax"],
        envelope_integral=c4_info["envelope_integral"],
        lemma_checks=checks,
        rel_tol=rel_tol,
        lemma_grid_points=lemma_grid_points,
    )
