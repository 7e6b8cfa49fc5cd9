"""Cross-method validation suites.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks pass. The CLI ``validate`` command prints them and exits
nonzero on failure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analytic, collective
from .analytic import ProtocolParams
from .optimize import maximize_rate_over_T, optimal_rate, parallel_map, rate_function

# grid on which the two Holevo constructions are compared
EQUIVALENCE_GRID = dict(V=(5.0, 20.0, 100.0), dV=(0.0, 0.5, 2.0), T=(0.2, 1.0), eta=(0.01, 0.1))
EQUIVALENCE_GAPS = (1e-2, 1e-3, 1e-4)
EQUIVALENCE_TOL = 1e-3

# reference values and acceptance bands for the large-V rate statistics
RMS_S_REFERENCE = 6e-5
RMS_S_BAND = (3e-5, 1.2e-4)
RMS_REL_REFERENCE = 0.02
RMS_REL_BAND = (0.01, 0.03)
RMS_REL_LIMIT_1E6 = 0.01
REFIT_TOL = 0.02
SERIES_TOL = 0.005


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


# --- analytic vs symplectic ---------------------------------------------------


def analytic_vs_symplectic(tol: float = 1e-9) -> list:
    """Closed-form individual rates against the explicit five-mode cloner model."""
    worst = 0.0
    for V, dV, T, eta, eps in itertools.product((2.0, 20.0, 1e3), (0.0, 1.0, 5.0), (0.3, 1.0), (0.01, 0.1, 0.5), (0.0, 0.05)):
        p = ProtocolParams(V=V, eta=eta, dV=dV, T=T, eps=eps)
        closed = analytic.individual_rate(p).rate
        modes = analytic.individual_rate_gaussian(p).rate
        worst = max(worst, abs(closed - modes))
    return [Check("individual rate: closed form vs covariance-matrix model", worst <= tol, f"max |diff| = {worst:.3g} (tol {tol:g})")]


# --- direct vs purification ---------------------------------------------------


def _equivalence_point(args):
    V, dV, T, eta = args
    direct = collective.holevo_direct(V, dV, T, 0.0, eta)
    diffs = []
    for gap in EQUIVALENCE_GAPS:
        state = collective.build_abcfg(V, collective.PurificationModel.for_noise(dV, 1.0 - gap), T, eta, 0.0)
        # dense route: the full five-mode spectra, not the complement shortcut
        diffs.append(abs(collective.holevo_purification(state, "dense") - direct))
    return diffs


def equivalence_table(jobs=None) -> tuple:
    """Return ``(points, diffs)`` with one row of |diff| per coupling gap ``1 - tn``."""
    g = EQUIVALENCE_GRID
    pts = list(itertools.product(g["V"], g["dV"], g["T"], g["eta"]))
    return pts, np.array(parallel_map(_equivalence_point, pts, jobs))


def direct_vs_purification(jobs=None) -> list:
    pts, diffs = equivalence_table(jobs)
    at_default = diffs[:, -1].max()
    noisy = np.array([p[1] > 0 for p in pts])
    mono = bool(np.all(np.diff(diffs[noisy], axis=1) < 0.0))
    return [
        Check("holevo: purification vs direct at tn = 1 - 1e-4", at_default <= EQUIVALENCE_TOL, f"max |diff| = {at_default:.3g} bits (tol {EQUIVALENCE_TOL:g})"),
        Check(
            "holevo: difference shrinks as tn -> 1",
            mono,
            "max |diff| per gap " + ", ".join(f"{g:g}: {d:.3g}" for g, d in zip(EQUIVALENCE_GAPS, diffs.max(axis=0))),
        ),
    ]


# --- optimal attenuation ------------------------------------------------------


def topt_sample(n: int = 50, seed: int = 7):
    rng = np.random.default_rng(seed)
    V = 10 ** rng.uniform(0.5, 3.0, n)
    dV = rng.uniform(0.1, 10.0, n)
    eta = rng.uniform(0.01, 0.5, n)
    eps = rng.choice([0.0, 0.0, 0.02, 0.05], n)
    return list(zip(V, dV, eta, eps))


def topt(n: int = 50, tol: float = 1e-4) -> list:
    worst = 0.0
    for V, dV, eta, eps in topt_sample(n):
        p = ProtocolParams(V=V, eta=eta, dV=dV, eps=eps)
        num = maximize_rate_over_T(lambda t: analytic.individual_rate(p.with_(T=t)).rate).T
        worst = max(worst, abs(num - analytic.t_opt_analytic(V, dV, eta, eps)))
    spot = maximize_rate_over_T(lambda t: analytic.individual_rate(ProtocolParams(V=20.0, eta=0.01, dV=1.0, T=t)).rate).T
    return [
        Check("T_opt: numeric argmax vs closed form", worst <= tol, f"max |diff| = {worst:.3g} over {n} points (tol {tol:g})"),
        Check("T_opt: V=20, dV=1, eta=0.01", abs(spot - 0.17468) <= tol, f"T* = {spot:.6f} (expected 0.17468)"),
    ]


# --- series coefficients ------------------------------------------------------


def _lstsq_coeffs(eta, eps, y, weights=None) -> np.ndarray:
    eta, eps, y = map(np.asarray, (eta, eps, y))
    ee = eta * eps
    X = np.c_[eta, ee, ee * np.log(ee)]
    if weights is not None:
        X, y = X * weights[:, None], y * weights
    return np.linalg.lstsq(X, y, rcond=None)[0]


def series_coefficients_from_closed_form(dps: int = 80) -> np.ndarray:
    """Three-term coefficients of the dV=0 rate in the limit V -> inf, eta -> 0.

    The closed-form two-mode rate is evaluated in extended precision at very
    large V and tiny eta, where the expansion is asymptotically exact, and
    fitted with relative (1/eta) weights.
    """
    import mpmath

    with mpmath.workdps(dps):
        V = mpmath.mpf(10) ** 14
        rows = [
            (eta, eps, float(collective.collective_rate_pure_states(V, mpmath.mpf(eta), mpmath.mpf(eps), mp=mpmath.mp)))
            for eta in np.geomspace(1e-8, 1e-7, 8)
            for eps in np.linspace(0.01, 0.1, 8)
        ]
    eta, eps, y = np.array(rows).T
    return _lstsq_coeffs(eta, eps, y, weights=1.0 / eta)


def midpoints(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def _optimized_point(args):
    V, eta, dV, eps = args
    rate = rate_function("collective", "purification")
    return optimal_rate(rate, ProtocolParams(V=V, eta=eta, dV=dV, eps=eps)).rate


def optimized_rate_grid(V: float, n: int = 10, jobs=None) -> dict:
    """Optimally purified collective rates on the ``n^3`` midpoint grid.

    Grid: eta, eps in (0.01, 0.1), dV in (0, 5). Also returns the dV=0
    rate at each point as reference (evaluated through the purification
    route, which unlike the double-precision closed form keeps full accuracy
    at large V).
    """
    pts = [(V, float(e), float(d), float(x)) for e in midpoints(0.01, 0.1, n) for d in midpoints(0.0, 5.0, n) for x in midpoints(0.01, 0.1, n)]
    opt = np.array(parallel_map(_optimized_point, pts, jobs))
    eta = np.array([p[1] for p in pts])
    eps = np.array([p[3] for p in pts])
    ref = np.array([collective.collective_rate(ProtocolParams(V=V, eta=e, eps=x)).rate for e, x in zip(eta, eps)])
    return {"eta": eta, "eps": eps, "rate": opt, "reference": ref}


def refit_coefficients(V: float = 1e5, n: int = 10, jobs=None, grid=None) -> np.ndarray:
    g = grid if grid is not None else optimized_rate_grid(V, n, jobs)
    return _lstsq_coeffs(g["eta"], g["eps"], g["rate"])


def series_fit(jobs=None, grid=None) -> list:
    series = series_coefficients_from_closed_form()
    refit = refit_coefficients(jobs=jobs, grid=grid)
    ok_series = np.all(np.abs(series - np.array(collective.PRINTED_SERIES_COEFFS)) <= SERIES_TOL)
    ok_refit = np.all(np.abs(refit - np.array(collective.FITTED_COEFFS)) <= REFIT_TOL)
    fmt = lambda c: "(" + ", ".join(f"{x:.4f}" for x in c) + ")"
    return [
        Check("series: dV=0 expansion coefficients", bool(ok_series), f"{fmt(series)} vs {fmt(collective.PRINTED_SERIES_COEFFS)} (tol {SERIES_TOL:g})"),
        Check("series: refit of optimized rate at V=1e5", bool(ok_refit), f"{fmt(refit)} vs {fmt(collective.FITTED_COEFFS)} (tol {REFIT_TOL:g})"),
    ]


# --- rms deviation ------------------------------------------------------------


def rms_statistics(grid: dict) -> tuple:
    """``(s, relative)``: sample standard deviation of optimized minus reference, and s over the mean reference."""
    d = grid["reference"] - grid["rate"]
    s = math.sqrt(float(np.sum(d * d)) / (len(d) - 1))
    return s, s / float(np.mean(grid["reference"]))


def rms_deviation(jobs=None, grids=None) -> list:
    grids = grids or {}
    g5 = grids.get(1e5) or optimized_rate_grid(1e5, jobs=jobs)
    g6 = grids.get(1e6) or optimized_rate_grid(1e6, jobs=jobs)
    s5, rel5 = rms_statistics(g5)
    s6, rel6 = rms_statistics(g6)
    lo, hi = RMS_S_BAND
    rlo, rhi = RMS_REL_BAND
    return [
        Check("rms: s at V=1e5", lo <= s5 <= hi, f"s = {s5:.3g} (band [{lo:g}, {hi:g}])"),
        Check("rms: relative deviation at V=1e5", rlo <= rel5 <= rhi, f"{100 * rel5:.2f}% (band [{100 * rlo:g}%, {100 * rhi:g}%])"),
        Check("rms: relative deviation at V=1e6", rel6 < RMS_REL_LIMIT_1E6, f"{100 * rel6:.2f}% (s = {s6:.3g}; limit {100 * RMS_REL_LIMIT_1E6:g}%)"),
    ]


SUITES: dict[str, Callable[..., list]] = {
    "analytic_vs_symplectic": lambda jobs=None: analytic_vs_symplectic(),
    "direct_vs_purification": direct_vs_purification,
    "topt": lambda jobs=None: topt(),
    "series_fit": series_fit,
    "rms_deviation": rms_deviation,
}


def run_suite(name: str, jobs=None) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](jobs=jobs)
