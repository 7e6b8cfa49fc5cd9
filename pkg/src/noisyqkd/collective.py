"""Collective-attack (Holevo) bounds.

Two constructions of Eve's information are provided:

* ``holevo_direct`` keeps Eve's single beam-splitter mode explicitly; valid
  for a pure-loss channel with trusted detection noise.
* ``holevo_purification`` builds the five-mode state ABCFG in which Alice's
  preparation noise comes from a second EPR source coupled into the signal
  on a nearly transparent beam splitter. Eve holds the purification, so
  ``chi_BE = S(ABCFG) - S(ACFG | x_B)``. This one handles channel noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gaussian as gc
from .analytic import KeyRateResult, ProtocolParams, cloner_variance
from .gaussian import DomainError

DEFAULT_TN = 1.0 - 1e-4

A, B, C, F, G = range(5)
ABCFG_LABELS = ("A", "B", "C", "F", "G")


@dataclass(frozen=True)
class PurificationModel:
    """Preparation noise emulated by an EPR source of variance ``dv0`` coupled at ``tn``.

    The injected noise is ``(1 - tn) * dv0``.
    """

    tn: float
    dv0: float

    def __post_init__(self):
        if not 0.0 < self.tn < 1.0:
            raise DomainError(f"tn must lie in (0, 1), got {self.tn}")
        if self.dv0 < 1.0:
            raise DomainError(f"dv0 must be >= 1, got {self.dv0}")

    @property
    def dV(self) -> float:
        return (1.0 - self.tn) * self.dv0

    @classmethod
    def for_noise(cls, dV: float, tn: float = DEFAULT_TN) -> "PurificationModel | None":
        """Model injecting ``dV``; ``None`` when there is no preparation noise.

        Noise below ``1 - tn`` cannot be reached with ``dv0 >= 1``; the coupling
        is then made more transparent so that ``dv0 = 1`` exactly.
        """
        if dV < 0.0:
            raise DomainError(f"dV must be >= 0, got {dV}")
        if dV == 0.0:
            return None
        if dV < 1.0 - tn:
            return cls(1.0 - dV, 1.0)
        return cls(tn, dV / (1.0 - tn))


@dataclass(frozen=True)
class FiveModeState:
    cm: np.ndarray
    params: ProtocolParams
    purif: "PurificationModel | None"
    labels: tuple = ABCFG_LABELS
    channel_input: float = math.nan  # variance of B entering the channel


def build_abcfg(
    V: float,
    purif: "PurificationModel | None",
    T: float,
    eta: float,
    eps: float = 0.0,
    dV: "float | None" = None,
) -> FiveModeState:
    """Entanglement-based picture of the noisy, purified, transmitted signal.

    If ``dV`` is given it must match the noise injected by ``purif``.
    """
    injected = 0.0 if purif is None else purif.dV
    if dV is not None and abs(dV - injected) > 1e-12 * max(1.0, dV):
        raise DomainError(f"purification model injects {injected}, requested dV={dV}")
    noise = gc.epr_source(purif.dv0) if purif is not None else gc.vacuum(2)
    cm = gc.compose([gc.epr_source(V), gc.vacuum(1), noise])
    if purif is not None:
        cm = gc.beam_splitter(cm, B, G, purif.tn)
    cm = gc.beam_splitter(cm, B, C, T)
    b_in = float(cm[2 * B, 2 * B])
    cm = gc.loss_channel(cm, B, eta, eps)
    return FiveModeState(cm, ProtocolParams(V=V, eta=eta, dV=injected, T=T, eps=eps), purif, channel_input=b_in)


def _eve_state(b_in: float, eta: float, eps: float) -> np.ndarray:
    """Modes (B, E1, E2): thermal input of B mixed with one arm of the cloner EPR pair."""
    cm = gc.compose([gc.thermal(b_in), gc.epr_source(cloner_variance(eta, eps))])
    return gc.beam_splitter(cm, 0, 1, eta)


def holevo_purification(state: FiveModeState, route: str = "complement") -> float:
    """``S(ABCFG) - S(ACFG | x_B)`` for a state from :func:`build_abcfg`.

    ``route="dense"`` diagonalises the five- and four-mode matrices directly.
    Their spectra sit close to 1 where the entropy kernel is steep, so for a
    strongly squeezed noise source the result carries roundoff of order
    1e-7 bits. ``route="complement"`` (default) uses that ABCFG together
    with the two cloner modes E1, E2 is pure both before and after the
    homodyne on B, so each entropy equals that of E1E2, which depends only on
    the variance of B entering the channel.
    """
    if route == "dense":
        s_all = gc.von_neumann_entropy(state.cm)
        s_cond = gc.von_neumann_entropy(gc.homodyne_condition(state.cm, B, "x"))
    elif route == "complement":
        p = state.params
        bee = _eve_state(state.channel_input, p.eta, p.eps)
        s_all = gc.von_neumann_entropy(gc.reduce_state(bee, [1, 2]))
        s_cond = gc.von_neumann_entropy(gc.homodyne_condition(bee, 0, "x"))
    else:
        raise DomainError(f"unknown route {route!r}; use 'complement' or 'dense'")
    return max(s_all - s_cond, 0.0)


def holevo_direct(V: float, dV: float, T: float, chi: float, eta: float) -> float:
    """Holevo bound from Eve's beam-splitter mode (pure-loss channel)."""
    b = T * (V + dV) + 1.0 - T
    v_e = (1.0 - eta) * b + eta
    v_b = eta * b + 1.0 - eta + chi
    c_be2 = eta * (1.0 - eta) * (1.0 - b) ** 2
    lam1 = v_e
    lam2 = math.sqrt(max(v_e * (v_e - c_be2 / v_b), 1.0))
    return max(gc.entropy_from_spectrum([lam1]) - gc.entropy_from_spectrum([lam2]), 0.0)


def mutual_information_ab(V: float, dV: float, T: float, chi: float, eta: float, eps: float = 0.0) -> float:
    """Alice (heterodyne on A) and Bob (homodyne) mutual information in bits."""
    v_b = eta * (T * (V + dV) + 1.0 - T) + 1.0 - eta + eta * eps + chi
    c2 = T * eta * (V * V - 1.0)
    v_a_b = V - c2 / v_b
    return 0.5 * math.log2((V + 1.0) / (v_a_b + 1.0))


def collective_rate(p: ProtocolParams, method: str = "purification", tn: float = DEFAULT_TN) -> KeyRateResult:
    """Net collective-attack rate ``I_AB - chi_BE``.

    The purification method treats all receiver noise as untrusted: ``chi`` is
    folded into the channel excess noise.
    """
    i_ab = mutual_information_ab(p.V, p.dV, p.T, p.chi, p.eta, p.eps)
    if method == "direct":
        if p.eps != 0.0:
            raise DomainError("direct Holevo method requires a pure-loss channel (eps = 0)")
        holevo = holevo_direct(p.V, p.dV, p.T, p.chi, p.eta)
    elif method == "purification":
        eps = p.eps + p.chi / p.eta
        state = build_abcfg(p.V, PurificationModel.for_noise(p.dV, tn), p.T, p.eta, eps)
        holevo = holevo_purification(state)
    else:
        raise DomainError(f"unknown method {method!r}; use 'direct' or 'purification'")
    return KeyRateResult(i_ab, holevo, i_ab - holevo, "collective", p, extra={"method": method})


def collective_rate_value(p: ProtocolParams, method: str = "purification", tn: float = DEFAULT_TN) -> float:
    return collective_rate(p, method, tn).rate


def default_method(p: ProtocolParams) -> str:
    """Direct method where it applies (faster), purification otherwise."""
    return "direct" if p.eps == 0.0 else "purification"


def collective_rate_pure_states(V, eta, eps=0.0, *, mp=None):
    """Closed-form collective rate for noiseless preparation, no attenuation.

    Uses the two-mode symplectic eigenvalues of AB and of A conditioned on
    Bob's homodyne. Pass ``mp=mpmath.mp`` (with raised ``dps``) to evaluate in
    extended precision, e.g. for very large V.
    """
    m = math if mp is None else mp
    one = 1 if mp is None else mp.mpf(1)
    V = one * V
    a = V
    b = eta * (V - 1) + 1 + eta * eps
    c2 = eta * (V * V - 1)
    delta = a * a + b * b - 2 * c2
    det = (a * b - c2) ** 2
    root = m.sqrt(delta * delta - 4 * det)
    nu1 = m.sqrt((delta + root) / 2)
    nu2 = m.sqrt((delta - root) / 2)
    a_b = a - c2 / b
    nu3 = m.sqrt(a * a_b)

    def g(nu):
        x = (nu - 1) / 2
        if x <= 1e-300:
            return 0 * one
        return ((x + 1) * m.log(x + 1) - x * m.log(x)) / m.log(2)

    i_ab = m.log((a + 1) / (a_b + 1)) / (2 * m.log(2))
    return i_ab - (g(nu1) + g(nu2) - g(nu3))


SERIES_COEFFS = (1.0 / math.log(4.0), -(1.0 + math.log(2.0)) / math.log(4.0), 1.0 / math.log(4.0))
PRINTED_SERIES_COEFFS = (0.721, -1.221, 0.721)
FITTED_COEFFS = (0.722, -1.237, 0.731)


def _three_term(coeffs, eta: float, eps: float) -> float:
    a, b, c = coeffs
    ee = eta * eps
    log_term = ee * math.log(ee) if ee > 0.0 else 0.0
    return a * eta + b * ee + c * log_term


def series_rate_infV(eta: float, eps: float) -> float:
    """Small-loss expansion of the dV=0, V->inf collective rate (printed coefficients)."""
    if eta * eps >= 1.0:
        raise DomainError("expansion needs eta*eps < 1")
    return _three_term(PRINTED_SERIES_COEFFS, eta, eps)


def fitted_rate_infV(eta: float, eps: float) -> float:
    """Least-squares fit of the optimally purified collective rate at large V."""
    if eta * eps >= 1.0:
        raise DomainError("expansion needs eta*eps < 1")
    return _three_term(FITTED_COEFFS, eta, eps)
