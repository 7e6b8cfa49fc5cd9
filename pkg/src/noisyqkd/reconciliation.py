"""Imperfect reconciliation: beta-discounted rates and SNR-parametrised thresholds.

The SNR is the signal variance over the total noise variance at the channel
output, ``snr = T*eta*(V-1) / (1 + T*eta*dV)``. Threshold surfaces over
``(beta, snr)`` use a pure-loss channel and collective attacks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import gaussian as gc
from .analytic import ProtocolParams, individual_rate
from .collective import holevo_direct, mutual_information_ab
from .gaussian import DomainError
from .optimize import DV_CAP, ThresholdResult, _find_root, _probes, parallel_map


class InfeasibleSNRError(DomainError):
    """Raised when an SNR cannot be reached with an attenuation in (0, 1]."""


@dataclass(frozen=True)
class ReconParams:
    beta: float
    snr: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.snr > 0.0:
            raise DomainError(f"snr must be > 0, got {self.snr}")


def snr(V: float, dV: float, T: float, eta: float) -> float:
    return T * eta * (V - 1.0) / (1.0 + T * eta * dV)


def v_from_snr(snr: float, dV: float, eta: float) -> float:
    """Source variance giving ``snr`` without attenuation (T = 1)."""
    if snr <= 0.0:
        raise DomainError(f"snr must be > 0, got {snr}")
    return 1.0 + snr * (1.0 + eta * dV) / eta


def sigma_from_snr(snr: float, dV: float, eta: float) -> float:
    """Modulation variance giving ``snr`` without attenuation (T = 1)."""
    return snr * (1.0 + eta * dV) / eta


def t_from_snr(snr: float, V: float, dV: float, eta: float) -> float:
    """Attenuation that sets the channel-output SNR to ``snr``."""
    if snr <= 0.0:
        raise DomainError(f"snr must be > 0, got {snr}")
    denom = eta * (V - 1.0 - snr * dV)
    if denom <= 0.0:
        raise InfeasibleSNRError(f"snr={snr} unreachable at V={V}, dV={dV}")
    t = snr / denom
    if t > 1.0 + 1e-12:
        raise InfeasibleSNRError(f"snr={snr} needs T={t:.6g} > 1")
    return min(t, 1.0)


def max_feasible_dv(snr: float, V: float, eta: float) -> float:
    """Largest preparation noise at which ``snr`` is reachable with ``T <= 1``."""
    return (eta * (V - 1.0) - snr) / (snr * eta)


def effective_rate(beta: float, i_ab: float, chi_be: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    return beta * i_ab - chi_be


def i_eff(beta: float, V: float, dV: float, T: float, eta: float, attack: str = "collective") -> float:
    """Effective rate on a pure-loss channel.

    ``attack="individual"`` discounts against Eve's Shannon information
    instead of the Holevo bound; it is a convenience variant, not used for
    the threshold surfaces.
    """
    i_ab = mutual_information_ab(V, dV, T, 0.0, eta)
    if attack == "collective":
        eve = holevo_direct(V, dV, T, 0.0, eta)
    elif attack == "individual":
        res = individual_rate(ProtocolParams(V=V, eta=eta, dV=dV, T=T))
        i_ab, eve = res.i_ab, res.eve_info
    else:
        raise DomainError(f"unknown attack {attack!r}")
    return effective_rate(beta, i_ab, eve)


def i_eff_modes(beta: float, sigma: float, dV: float, eta: float) -> float:
    """Effective collective rate rebuilt from explicit modes, parametrised by modulation.

    Modes A, B (signal EPR with variance ``1 + sigma``) and Eve's channel mode E.
    Alice heterodynes A; ``chi_BE = S(E) - S(E | x_B)``.
    """
    A, B, E = range(3)
    cm = gc.compose([gc.epr_source(1.0 + sigma), gc.vacuum(1)])
    cm = gc.add_phase_insensitive_noise(cm, B, dV)
    cm = gc.beam_splitter(cm, B, E, eta)
    v_b = cm[2 * B, 2 * B]
    v_b_a = gc.heterodyne_condition(gc.reduce_state(cm, [A, B]), 0)[0, 0]
    i_ab = 0.5 * math.log2(v_b / v_b_a)
    s_e = gc.von_neumann_entropy(gc.reduce_state(cm, [E]))
    s_e_b = gc.von_neumann_entropy(gc.homodyne_condition(gc.reduce_state(cm, [B, E]), 0, "x"))
    return effective_rate(beta, i_ab, s_e - s_e_b)


def dv_max_unpurified(beta: float, snr_: float, eta: float, route: str = "V", cap: float = DV_CAP) -> ThresholdResult:
    """Preparation-noise threshold at fixed SNR without attenuation.

    The source variance is eliminated through the SNR at every probe, so the
    result does not depend on V. ``route="sigma"`` evaluates the rate through
    the explicit-mode construction parametrised by the modulation variance.
    """
    ReconParams(beta, snr_)
    if route == "V":
        f = lambda dv: i_eff(beta, v_from_snr(snr_, dv, eta), dv, 1.0, eta)
    elif route == "sigma":
        f = lambda dv: i_eff_modes(beta, sigma_from_snr(snr_, dv, eta), dv, eta)
    else:
        raise DomainError(f"unknown route {route!r}")
    return _find_root(f, _probes(cap), cap)


def dv_max_purified(beta: float, snr_: float, V: float, eta: float, cap: float = DV_CAP) -> Optional[ThresholdResult]:
    """Preparation-noise threshold with the attenuation fixed by the SNR.

    Returns ``None`` when the SNR is unreachable even without noise. If the
    rate stays positive up to the noise level where the SNR stops being
    reachable, that level is returned with ``converged=False``.
    """
    ReconParams(beta, snr_)
    edge = max_feasible_dv(snr_, V, eta)
    if edge < 0.0:
        return None

    def f(dv):
        return i_eff(beta, V, dv, t_from_snr(snr_, V, dv, eta), eta)

    limit = min(cap, edge * (1.0 - 1e-12))
    probes = _probes(cap)
    probes = np.concatenate([probes[probes < limit], [limit]])
    res = _find_root(f, probes, limit)
    if math.isinf(res.value) and edge < cap:
        return ThresholdResult(limit, f(limit), res.iterations, False)
    return res


def cap_for_display(value: float, cap: float = 10.0) -> float:
    return min(value, cap)


# --- surfaces -------------------------------------------------------------------


def _unpurified_point(args):
    beta, s, eta = args
    return dv_max_unpurified(beta, s, eta).value


def _purified_point(args):
    beta, s, V, eta = args
    res = dv_max_purified(beta, s, V, eta)
    return math.nan if res is None else res.value


def dv_max_surface(beta_grid, snr_grid, eta: float, V: Optional[float] = None, purified: bool = False, jobs=None) -> np.ndarray:
    """``dV_max`` over ``(beta, snr)``; NaN marks unreachable SNR, inf an unbounded threshold."""
    if purified:
        if V is None:
            raise DomainError("purified surface needs a source variance V")
        pts = [(float(b), float(s), V, eta) for b in beta_grid for s in snr_grid]
        vals = parallel_map(_purified_point, pts, jobs)
    else:
        pts = [(float(b), float(s), eta) for b in beta_grid for s in snr_grid]
        vals = parallel_map(_unpurified_point, pts, jobs)
    return np.array(vals).reshape(len(beta_grid), len(snr_grid))


# --- beta(snr) tables -----------------------------------------------------------


def load_beta_table(path) -> Callable[[float], float]:
    """Read a two-column ``snr,beta`` CSV and return a linear interpolant.

    A header row is allowed. Rows must have ascending SNR and beta in [0, 1];
    evaluating outside the tabulated SNR range raises ``DomainError``.
    """
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or not rec[0].strip():
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if rows:
                    raise DomainError(f"bad row in beta table: {rec}")
    if len(rows) < 2:
        raise DomainError("beta table needs at least two rows")
    s, b = np.array(rows).T
    if np.any(np.diff(s) <= 0.0):
        raise DomainError("beta table SNR column must be strictly ascending")
    if np.any((b < 0.0) | (b > 1.0)):
        raise DomainError("beta table values must lie in [0, 1]")

    def beta_of(snr_: float) -> float:
        if not s[0] <= snr_ <= s[-1]:
            raise DomainError(f"snr={snr_} outside beta table range [{s[0]}, {s[-1]}]")
        return float(np.interp(snr_, s, b))

    return beta_of
