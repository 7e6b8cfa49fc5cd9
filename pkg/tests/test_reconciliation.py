import math

import numpy as np
import pytest

from noisyqkd import collective as co
from noisyqkd import optimize as op
from noisyqkd import reconciliation as rc
from noisyqkd.gaussian import DomainError


@pytest.mark.parametrize(
    "V, dV, T, eta, expected",
    [(11, 0, 1, 0.1, 1.0), (20, 1, 0.5 / 1.85, 0.1, 0.5), (20, 1, 0.0, 0.1, 0.0)],
)
def test_snr_values(V, dV, T, eta, expected):
    assert rc.snr(V, dV, T, eta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("s, dV, eta, expected", [(1, 0, 0.1, 11.0), (2, 5, 0.01, 211.0), (1e-12, 0, 0.1, 1.0)])
def test_v_from_snr(s, dV, eta, expected):
    assert rc.v_from_snr(s, dV, eta) == pytest.approx(expected, rel=1e-10)


def test_t_from_snr_values():
    assert rc.t_from_snr(0.5, 20, 1, 0.1) == pytest.approx(0.5 / 1.85, abs=1e-12)
    assert rc.t_from_snr(0.1 * 19, 20, 0, 0.1) == 1.0


@pytest.mark.parametrize("s, dV", [(5.0, 1.0), (3.0, 10.0)])
def test_t_from_snr_infeasible(s, dV):
    with pytest.raises(rc.InfeasibleSNRError):
        rc.t_from_snr(s, 20, dV, 0.1)


def test_recon_params_ranges():
    with pytest.raises(DomainError):
        rc.ReconParams(1.2, 1.0)
    with pytest.raises(DomainError):
        rc.ReconParams(0.5, 0.0)


def test_round_trips():
    rng = np.random.default_rng(5)
    for _ in range(200):
        eta, dV, s = rng.uniform(0.01, 1), rng.uniform(0, 10), 10 ** rng.uniform(-2, 1)
        assert rc.snr(rc.v_from_snr(s, dV, eta), dV, 1.0, eta) == pytest.approx(s, rel=1e-12)
        V = rc.v_from_snr(s, dV, eta) * rng.uniform(1.01, 5)
        assert rc.snr(V, dV, rc.t_from_snr(s, V, dV, eta), eta) == pytest.approx(s, rel=1e-12)


def test_effective_rate():
    assert rc.effective_rate(0.9, 0.768025, 0.5) == pytest.approx(0.1912225, abs=1e-12)
    assert rc.effective_rate(1.0, 0.7, 0.2) == pytest.approx(0.5)
    assert rc.effective_rate(0.0, 0.7, 0.2) == -0.2
    with pytest.raises(DomainError):
        rc.effective_rate(1.5, 0.7, 0.2)


def test_full_efficiency_matches_collective_rate():
    for V, dV, T in [(20, 0, 1), (20, 1, 0.3), (1e3, 5, 0.05)]:
        p = co.ProtocolParams(V=V, eta=0.1, dV=dV, T=T)
        assert rc.i_eff(1.0, V, dV, T, 0.1) == co.collective_rate(p, "direct").rate


def test_i_eff_increases_with_beta():
    vals = [rc.i_eff(b, 20, 1, 0.5, 0.1) for b in np.linspace(0, 1, 11)]
    assert np.all(np.diff(vals) > 0)


def test_individual_variant_is_available():
    assert rc.i_eff(1.0, 20, 0, 1, 0.1, attack="individual") > rc.i_eff(1.0, 20, 0, 1, 0.1)


@pytest.mark.parametrize("beta, s", [(0.9, 0.5), (1.0, 0.1), (0.8, 1.0), (0.95, 0.01)])
def test_unpurified_threshold_independent_of_parametrisation(beta, s):
    a = rc.dv_max_unpurified(beta, s, 0.1)
    b = rc.dv_max_unpurified(beta, s, 0.1, route="sigma")
    assert a.value == pytest.approx(b.value, abs=1e-6)


@pytest.mark.parametrize("beta, s", [(0.9, 0.5), (1.0, 1.8), (0.5, 0.01)])
def test_thresholds_are_roots(beta, s):
    res = rc.dv_max_unpurified(beta, s, 0.1)
    assert res.converged and abs(res.achieved_rate) <= 1e-7
    d = res.value
    assert rc.i_eff(beta, rc.v_from_snr(s, d, 0.1), d, 1.0, 0.1) == pytest.approx(0.0, abs=1e-7)
    pur = rc.dv_max_purified(beta, s, 20, 0.1)
    if pur.converged:
        assert abs(pur.achieved_rate) <= 1e-7


def test_insecure_without_noise_gives_zero():
    assert rc.dv_max_unpurified(0.5, 1.8, 0.1).value == 0.0


def test_large_snr_tracks_collective_threshold():
    # without reconciliation loss the SNR-fixed threshold is the ordinary
    # collective threshold at the source variance implied by the SNR
    s, eta = 1.8, 0.1
    res = rc.dv_max_unpurified(1.0, s, eta)
    V = rc.v_from_snr(s, res.value, eta)
    direct = op.dv_max("collective", V, eta)
    assert res.value == pytest.approx(direct.value, rel=1e-5)


def test_surfaces_monotone_in_beta():
    betas, snrs = np.linspace(0.5, 1.0, 4), [0.01, 0.3, 1.0, 1.8]
    un = rc.dv_max_surface(betas, snrs, 0.1, jobs=1)
    pu = rc.dv_max_surface(betas, snrs, 0.1, V=20, purified=True, jobs=1)
    assert np.all(np.diff(un, axis=0) >= 0)
    assert np.all(np.diff(pu, axis=0) >= 0)


@pytest.mark.parametrize("beta", [0.5, 0.75, 0.9, 1.0])
@pytest.mark.parametrize("s", [0.01, 0.1, 0.3, 1.0, 1.8])
def test_purification_helps_where_defined(beta, s):
    pu = rc.dv_max_purified(beta, s, 20, 0.1)
    # a value pinned at the feasibility edge is a truncation, not a root
    if pu is not None and pu.converged:
        assert pu.value >= rc.dv_max_unpurified(beta, s, 0.1).value - 1e-9


def test_purified_surface_needs_variance():
    with pytest.raises(DomainError):
        rc.dv_max_surface([1.0], [1.0], 0.1, purified=True)


def test_unreachable_snr_is_marked():
    assert rc.dv_max_purified(1.0, 5.0, 20, 0.1) is None
    assert math.isnan(rc.dv_max_surface([1.0], [5.0], 0.1, V=20, purified=True, jobs=1)[0, 0])


def test_feasibility_edge_is_flagged():
    res = rc.dv_max_purified(1.0, 1.8, 20, 0.1)
    assert not res.converged
    assert res.value == pytest.approx(rc.max_feasible_dv(1.8, 20, 0.1), rel=1e-9)


def test_low_corner_threshold_high_but_rate_tiny():
    beta, s, V, eta = 0.5, 0.002, 20, 0.1
    assert rc.dv_max_purified(beta, s, V, eta).value >= 10
    assert rc.i_eff(beta, V, 0.0, rc.t_from_snr(s, V, 0.0, eta), eta) < 1e-3
    assert rc.cap_for_display(rc.dv_max_purified(beta, s, V, eta).value) == 10


@pytest.mark.parametrize("dV", [0.0, 0.5, 2.0])
def test_full_transmission_coincidence(dV):
    # choosing the SNR that needs T = 1 makes both parametrisations the same state
    V, eta = 20.0, 0.1
    s = rc.snr(V, dV, 1.0, eta)
    assert rc.t_from_snr(s, V, dV, eta) == pytest.approx(1.0, abs=1e-12)
    purified = rc.i_eff(1.0, V, dV, rc.t_from_snr(s, V, dV, eta), eta)
    plain = rc.i_eff(1.0, rc.v_from_snr(s, dV, eta), dV, 1.0, eta)
    assert purified == pytest.approx(plain, abs=1e-12)


# --- beta tables ------------------------------------------------------------------


def test_beta_table_interpolates(tmp_path):
    path = tmp_path / "beta.csv"
    path.write_text("snr,beta\n0.1,0.8\n1.0,0.9\n2.0,0.95\n")
    beta_of = rc.load_beta_table(path)
    assert beta_of(0.55) == pytest.approx(0.85)
    assert beta_of(2.0) == pytest.approx(0.95)
    with pytest.raises(DomainError):
        beta_of(3.0)


@pytest.mark.parametrize(
    "body",
    ["0.1,0.8\n", "1.0,0.8\n0.5,0.9\n", "0.1,0.8\n1.0,1.2\n", "0.1,0.8\nx,y\n"],
)
def test_beta_table_rejects_bad_input(tmp_path, body):
    path = tmp_path / "beta.csv"
    path.write_text(body)
    with pytest.raises(DomainError):
        rc.load_beta_table(path)
