"""Attenuation optimisation, threshold root finding and security-region surfaces."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import brentq

from .analytic import ProtocolParams, individual_rate
from .collective import DEFAULT_TN, collective_rate, default_method

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

T_TOL = 1e-6
PARAM_TOL = 1e-5
RATE_TOL = 1e-7
DV_CAP = 1e3
EPS_CAP = 10.0
T_FLOOR = 1e-7

# coarse scan used to bracket the optimum before golden-section refinement
_T_SCAN = np.unique(np.concatenate([np.geomspace(T_FLOOR, 1.0, 29), np.linspace(0.1, 1.0, 10)]))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class OptimumResult:
    T: float
    rate: float
    iterations: int
    unimodal: bool = True

    def __iter__(self):
        # allows ``T_star, rate_star = maximize_rate_over_T(...)``
        return iter((self.T, self.rate))


@dataclass(frozen=True)
class ThresholdResult:
    value: float
    achieved_rate: float
    iterations: int
    converged: bool

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)


def golden_section_max(f: Callable[[float], float], bracket: Bracket, xtol: float = T_TOL, rtol: float = 1e-6):
    """Maximise a unimodal ``f`` on ``bracket``.

    Stops when the interval is narrower than ``min(xtol, rtol * |x|)`` so
    optima close to zero are still resolved in relative terms.
    Returns ``(x, f(x), iterations)``.
    """
    a, b = bracket.lo, bracket.hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > max(min(xtol, rtol * abs(0.5 * (a + b))), 1e-15) and it < 200:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    return (c, fc, it) if fc >= fd else (d, fd, it)


def _local_maxima(values: np.ndarray) -> int:
    v = np.asarray(values)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
    return int(inner.sum() + (v[0] > v[1]) + (v[-1] > v[-2]))


def maximize_rate_over_T(ratefn: Callable[[float], float], tol: float = T_TOL) -> OptimumResult:
    """Best purifying attenuation ``T`` in ``(0, 1]`` for ``ratefn(T)``.

    A coarse log/linear scan brackets the maximum, golden-section search
    refines it. If the scan shows several local maxima the refinement is
    preceded by a 1e-3 uniform scan and the result is flagged non-unimodal.
    """
    grid = _T_SCAN
    vals = np.array([ratefn(t) for t in grid])
    unimodal = _local_maxima(vals) <= 1
    if not unimodal:
        fine = np.linspace(1e-3, 1.0, 1000)
        grid = np.unique(np.concatenate([grid, fine]))
        vals = np.array([ratefn(t) for t in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)] if k > 0 else 0.0
    hi = grid[min(k + 1, len(grid) - 1)]
    best_t, best_r = float(grid[k]), float(vals[k])
    if hi > lo:
        t, r, it = golden_section_max(ratefn, Bracket(lo, hi), xtol=tol)
        if r > best_r:
            best_t, best_r = float(t), float(r)
    else:
        it = 0
    return OptimumResult(best_t, best_r, it + len(grid), unimodal)


# --- rate selectors ---------------------------------------------------------


def rate_function(attack: str, method: Optional[str] = None, tn: float = DEFAULT_TN) -> Callable[[ProtocolParams], float]:
    """Map ``ProtocolParams -> rate`` for an attack model.

    For collective attacks ``method=None`` picks the direct method on a
    noiseless channel and the purification method otherwise.
    """
    if attack == "individual":
        return lambda p: individual_rate(p).rate
    if attack == "collective":
        if method is None:
            return lambda p: collective_rate(p, default_method(p), tn).rate
        return lambda p: collective_rate(p, method, tn).rate
    raise ValueError(f"unknown attack {attack!r}; use 'individual' or 'collective'")


def optimal_rate(rate: Callable[[ProtocolParams], float], p: ProtocolParams) -> OptimumResult:
    return maximize_rate_over_T(lambda t: rate(p.with_(T=t)))


def _find_root(f: Callable[[float], float], probes: Iterable[float], cap_value: float) -> ThresholdResult:
    """Root of a function positive at the first probe; +inf if it never turns negative."""
    probes = list(probes)
    prev = probes[0]
    f_prev = f(prev)
    if f_prev <= 0.0:
        return ThresholdResult(prev, f_prev, 1, True)
    n = 1
    for x in probes[1:]:
        fx = f(x)
        n += 1
        if fx <= 0.0:
            if fx == 0.0:
                return ThresholdResult(x, fx, n, True)
            root, info = brentq(f, prev, x, xtol=1e-12, rtol=4 * np.finfo(float).eps, full_output=True)
            fr = f(root)
            return ThresholdResult(root, fr, n + info.function_calls, abs(fr) <= RATE_TOL)
        prev, f_prev = x, fx
    return ThresholdResult(math.inf, f_prev, n, True)


def _probes(cap: float, first: float = 1e-3) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(first, cap, int(round(2 * math.log10(cap / first))) + 1)])


def dv_max(
    attack: str,
    V: float,
    eta: float,
    eps: float = 0.0,
    chi: float = 0.0,
    purified: bool = False,
    method: Optional[str] = None,
    cap: float = DV_CAP,
) -> ThresholdResult:
    """Largest tolerable preparation noise.

    Unpurified runs use ``T = 1``; purified runs maximise over ``T`` at each
    probe. Returns ``value = 0`` when insecure already without preparation
    noise and ``value = inf`` when still secure at ``cap``.
    """
    rate = rate_function(attack, method)
    base = ProtocolParams(V=V, eta=eta, chi=chi, eps=eps)
    if purified:
        f = lambda dv: optimal_rate(rate, base.with_(dV=dv)).rate
    else:
        f = lambda dv: rate(base.with_(dV=dv))
    return _find_root(f, _probes(cap), cap)


def eps_max(V: float, dV: float, eta: float, purified: bool = False, cap: float = EPS_CAP) -> ThresholdResult:
    """Largest tolerable channel excess noise under collective attacks."""
    rate = rate_function("collective", "purification")
    base = ProtocolParams(V=V, eta=eta, dV=dV)
    if purified:
        f = lambda e: optimal_rate(rate, base.with_(eps=e)).rate
    else:
        f = lambda e: rate(base.with_(eps=e))
    return _find_root(f, _probes(cap, first=1e-4), cap)


# --- surfaces ---------------------------------------------------------------


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: list, jobs: Optional[int] = None) -> list:
    """Order-preserving map; ``jobs=1`` runs in-process."""
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _region_point(args):
    V, eta, eps = args
    return dv_max("collective", V, eta, eps=eps, purified=True)


def security_region(V: float, eta_grid, eps_grid, jobs: Optional[int] = None) -> np.ndarray:
    """Purified collective ``dV_max`` on an ``(eta, eps)`` grid; ``inf`` where unbounded."""
    pts = [(V, float(e), float(x)) for e in eta_grid for x in eps_grid]
    res = parallel_map(_region_point, pts, jobs)
    return np.array([r.value for r in res]).reshape(len(eta_grid), len(eps_grid))


def _surface_point(args):
    V, eta, eps, dv = args
    rate = rate_function("collective")
    return optimal_rate(rate, ProtocolParams(V=V, eta=eta, dV=dv, eps=eps)).rate


def max_rate_surface(V: float, eta: float, eps_grid, dv_grid, jobs: Optional[int] = None):
    """Maximal (over T) collective rate on an ``(eps, dV)`` grid.

    Returns ``(floored, raw)``: the presentation surface clipped at zero and
    the raw signed values.
    """
    pts = [(V, eta, float(e), float(d)) for e in eps_grid for d in dv_grid]
    raw = np.array(parallel_map(_surface_point, pts, jobs)).reshape(len(eps_grid), len(dv_grid))
    return np.maximum(raw, 0.0), raw
