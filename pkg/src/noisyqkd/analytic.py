"""Closed-form individual-attack key rates, thresholds and optimal purification.

All rates are in bits per symbol under reverse reconciliation. Negative rates
are returned unchanged so callers can bisect on sign changes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import gaussian as gc
from .gaussian import DomainError

LN4 = math.log(4.0)


@dataclass(frozen=True)
class ProtocolParams:
    """Trusted-station and channel parameters in shot-noise units.

    Attributes:
        V: source variance, ``1 + sigma`` with modulation variance ``sigma``.
        dV: preparation noise on every prepared coherent state.
        T: purifying attenuation applied before the channel.
        chi: trusted detection noise at the receiver.
        eta: channel transmittivity.
        eps: untrusted channel excess noise (referred to the input).
    """

    V: float
    eta: float
    dV: float = 0.0
    T: float = 1.0
    chi: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if not self.V >= 1.0:
            raise DomainError(f"V must be >= 1, got {self.V}")
        if not self.dV >= 0.0:
            raise DomainError(f"dV must be >= 0, got {self.dV}")
        if not 0.0 <= self.T <= 1.0:
            raise DomainError(f"T must lie in [0, 1], got {self.T}")
        if not self.chi >= 0.0:
            raise DomainError(f"chi must be >= 0, got {self.chi}")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.eps >= 0.0:
            raise DomainError(f"eps must be >= 0, got {self.eps}")

    def with_(self, **kw) -> "ProtocolParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class KeyRateResult:
    i_ab: float
    eve_info: float
    rate: float
    attack: str
    params: ProtocolParams
    beta: float = 1.0
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CloneParams:
    """Eve's EPR variance for the entangling-cloner attack."""

    N: float

    @classmethod
    def from_channel(cls, eta: float, eps: float) -> "CloneParams":
        return cls(cloner_variance(eta, eps))


def cloner_variance(eta: float, eps: float) -> float:
    """EPR variance ``N = 1 + eta*eps/(1-eta)`` that emulates a noisy lossy channel."""
    if eta >= 1.0:
        if eps > 0.0:
            raise DomainError("a unit-transmittivity channel cannot carry excess noise")
        return 1.0
    return 1.0 + eta * eps / (1.0 - eta)


def _half_log2(x: float) -> float:
    return 0.5 * math.log2(x)


def _bob_input_variance(V: float, dV: float, T: float) -> float:
    # variance of the signal mode after purifying attenuation
    return T * (V + dV) + 1.0 - T


def rate_detection(V: float, dV: float, T: float, chi: float, eta: float) -> float:
    """Individual-attack rate with trusted detection noise, pure-loss channel."""
    u = T * (V + dV - 1.0)
    return _half_log2((1.0 + u) / (1.0 + u * (1.0 - eta)) + chi) - _half_log2(1.0 + T * eta * dV + chi)


def rate_channel(V: float, dV: float, T: float, eta: float, eps: float) -> float:
    """Individual-attack rate with untrusted channel noise (entangling cloner)."""
    b = _bob_input_variance(V, dV, T)
    v_b_e = 1.0 / (eta * (1.0 / b - 1.0 + eps) + 1.0)
    return _half_log2(v_b_e) - _half_log2(1.0 + T * eta * dV + eps * eta)


def _individual_i_ab(p: ProtocolParams) -> float:
    b = _bob_input_variance(p.V, p.dV, p.T)
    v_b = p.eta * b + 1.0 - p.eta + p.eta * p.eps + p.chi
    v_b_am = 1.0 + p.T * p.eta * p.dV + p.eta * p.eps + p.chi
    return _half_log2(v_b / v_b_am)


def individual_rate_detection(p: ProtocolParams) -> KeyRateResult:
    if p.eps != 0.0:
        raise DomainError("individual_rate_detection assumes a noiseless channel (eps = 0)")
    rate = rate_detection(p.V, p.dV, p.T, p.chi, p.eta)
    i_ab = _individual_i_ab(p)
    return KeyRateResult(i_ab, i_ab - rate, rate, "individual", p)


def individual_rate_channel(p: ProtocolParams) -> KeyRateResult:
    if p.chi != 0.0:
        raise DomainError("individual_rate_channel assumes an ideal detector (chi = 0)")
    rate = rate_channel(p.V, p.dV, p.T, p.eta, p.eps)
    i_ab = _individual_i_ab(p)
    return KeyRateResult(i_ab, i_ab - rate, rate, "individual", p)


def individual_rate(p: ProtocolParams) -> KeyRateResult:
    """Dispatch to the closed form that covers ``p``.

    With both ``chi`` and ``eps`` nonzero no closed form is printed, so the
    covariance-matrix construction is used instead.
    """
    if p.eps == 0.0:
        return individual_rate_detection(p)
    if p.chi == 0.0:
        return individual_rate_channel(p)
    return individual_rate_gaussian(p)


def individual_rate_gaussian(p: ProtocolParams) -> KeyRateResult:
    """Individual-attack rate rebuilt from explicit modes.

    Modes: A, B from the signal EPR source; C the vacuum port of the purifying
    attenuator; E1, E2 Eve's cloner EPR pair. Preparation noise is added to B
    as classical phase-insensitive noise. Eve estimates Bob's x quadrature
    from x measurements on both of her modes; Alice heterodynes A.
    """
    A, B, C, E1, E2 = range(5)
    cm = gc.compose([gc.epr_source(p.V), gc.vacuum(1), gc.epr_source(cloner_variance(p.eta, p.eps))])
    cm = gc.add_phase_insensitive_noise(cm, B, p.dV)
    cm = gc.beam_splitter(cm, B, C, p.T)
    cm = gc.beam_splitter(cm, B, E1, p.eta)
    cm = gc.add_phase_insensitive_noise(cm, B, p.chi)
    v_b = cm[2 * B, 2 * B]
    v_b_e = gc.conditional_variance(cm, B, [E1, E2], "x")
    after_alice = gc.heterodyne_condition(gc.reduce_state(cm, [A, B]), 0)
    v_b_am = after_alice[0, 0]
    i_ab = _half_log2(v_b / v_b_am)
    rate = _half_log2(v_b_e / v_b_am)
    return KeyRateResult(i_ab, i_ab - rate, rate, "individual", p)


# --- thresholds ------------------------------------------------------------------


def dv_threshold_individual(V: float, eta: float) -> float:
    """Preparation noise at which the unpurified (T=1) individual rate vanishes.

    Positive root of ``dV^2 + (V-1) dV - (V-1)/(1-eta) = 0``; it does not
    depend on the trusted detection noise and tends to ``1/(1-eta)`` as V grows.
    """
    if V < 1.0 or not 0.0 < eta < 1.0:
        raise DomainError("need V >= 1 and 0 < eta < 1")
    w = V - 1.0
    if w == 0.0:
        return 0.0
    disc = w * (w + 4.0 / (1.0 - eta))
    # cancellation-free form of (-w + sqrt(disc)) / 2
    return 2.0 * w / (1.0 - eta) / (w + math.sqrt(disc))


def dv_threshold_infV(T: float, eta: float, eps: float = 0.0) -> float:
    """Preparation-noise threshold of the ``V -> inf`` individual rate at attenuation T."""
    if not 0.0 < T <= 1.0:
        raise DomainError(f"T must lie in (0, 1], got {T}")
    if eps >= 1.0:
        raise DomainError("eps >= 1 leaves no positive preparation-noise threshold")
    if eps == 0.0:
        return 1.0 / (T * (1.0 - eta))
    return (1.0 - eps) / (T * (1.0 - eta + eta * eps)) - eps / T


class NoPurificationGainError(DomainError):
    """Raised when the optimal-attenuation formula has a non-positive radicand."""


def t_opt_analytic(V: float, dV: float, eta: float, eps: float = 0.0) -> float:
    """Attenuation maximising the individual channel-noise rate, clamped to (0, 1]."""
    if dV <= 0.0:
        return 1.0
    u = V + dV - 1.0
    k = eta * eps + 1.0
    radicand = (u * k - eta * dV) / (dV * (k - eta))
    if radicand <= 0.0:
        raise NoPurificationGainError("radicand of the optimal attenuation is not positive")
    t = (math.sqrt(radicand) - 1.0) / u
    if t <= 0.0:
        raise NoPurificationGainError("optimal attenuation is not positive")
    return min(t, 1.0)


def didt_at_zero(V: float, eta: float, noise: float = 0.0) -> float:
    """Slope of the purified rate at ``T = 0``.

    ``noise`` is the receiver-referred additive noise: ``chi`` for trusted
    detection noise, ``eta*eps`` for channel noise.
    """
    if V < 1.0:
        raise DomainError(f"V must be >= 1, got {V}")
    return eta * (V - 1.0) / (LN4 * (1.0 + noise))


def eta_bound(V: float, dV: float, N: float) -> float:
    """Largest transmittivity for which optimal purification is active (``T_opt < 1``).

    ``N`` is Eve's cloner variance, held fixed independently of the channel.
    A vanishing inner term means no restriction and returns 1 with a warning.
    Values above 1 (or ``inf``) likewise mean the bound is vacuous.
    """
    if V <= 1.0 or N < 1.0:
        raise DomainError("need V > 1 and N >= 1")
    inner = 1.0 - V - dV + dV * (V + dV) ** 2
    if inner == 0.0:
        warnings.warn("eta bound is unrestricted (inner term vanishes)", RuntimeWarning, stacklevel=2)
        return 1.0
    denom = 1.0 + (V - 1.0) / (N * inner)
    if denom <= 0.0:
        # no finite transmittivity bound
        return math.inf
    return 1.0 / denom


def rate_infV_optimal(eta: float, chi: float = 0.0, eps: float = 0.0) -> float:
    """Rate at infinite modulation under optimal purification (= the dV=0 limit)."""
    if chi != 0.0 and eps != 0.0:
        raise DomainError("closed form covers trusted chi or channel eps, not both")
    if eps == 0.0:
        return _half_log2((1.0 + chi * (1.0 - eta)) / ((1.0 + chi) * (1.0 - eta)))
    return _half_log2(1.0 / (eta * eps + 1.0 - eta)) - _half_log2(1.0 + eta * eps)


def rate_infV(T: float, dV: float, eta: float, chi: float = 0.0, eps: float = 0.0) -> float:
    """Individual rate in the ``V -> inf`` limit at fixed attenuation T."""
    if eps == 0.0:
        return _half_log2(1.0 / (1.0 - eta) + chi) - _half_log2(1.0 + T * eta * dV + chi)
    if chi != 0.0:
        raise DomainError("closed form covers trusted chi or channel eps, not both")
    return _half_log2(1.0 / (eta * eps + 1.0 - eta)) - _half_log2(1.0 + T * eta * dV + eta * eps)
