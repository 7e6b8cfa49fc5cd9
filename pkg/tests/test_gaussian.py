import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyqkd import gaussian as gc

# --- helpers ---------------------------------------------------------------------


def random_symplectic(n, rng):
    """Random symplectic matrix: passive mixing interleaved with single-mode squeezers."""
    s = np.eye(2 * n)
    for _ in range(3):
        for k in range(n):
            r = rng.uniform(-1.0, 1.0)
            sq = np.eye(2 * n)
            sq[2 * k, 2 * k], sq[2 * k + 1, 2 * k + 1] = math.exp(r), math.exp(-r)
            s = sq @ s
            phi = rng.uniform(0, 2 * math.pi)
            rot = np.eye(2 * n)
            rot[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]]
            s = rot @ s
        for i in range(n):
            for j in range(i + 1, n):
                t = rng.uniform(0, 1)
                m = np.eye(2 * n)
                a, b = math.sqrt(t), math.sqrt(1 - t)
                for q in (0, 1):
                    m[2 * i + q, 2 * i + q], m[2 * i + q, 2 * j + q] = a, b
                    m[2 * j + q, 2 * i + q], m[2 * j + q, 2 * j + q] = -b, a
                s = m @ s
    return s


def random_state(n, rng, thermal=True):
    nus = rng.uniform(1.0, 5.0, n) if thermal else np.ones(n)
    diag = np.repeat(nus, 2)
    s = random_symplectic(n, rng)
    return s @ np.diag(diag) @ s.T, np.sort(nus)[::-1]


seeds = st.integers(min_value=0, max_value=2**32 - 1)


# --- sources and compose ---------------------------------------------------------


def test_epr_unit_variance_is_two_vacua():
    assert np.array_equal(gc.epr_source(1.0), np.eye(4))


def test_epr_blocks_and_purity():
    cm = gc.epr_source(2.0)
    np.testing.assert_allclose(cm[:2, :2], 2 * np.eye(2))
    np.testing.assert_allclose(cm[:2, 2:], math.sqrt(3) * np.diag([1.0, -1.0]))
    np.testing.assert_allclose(gc.symplectic_eigenvalues(cm), [1.0, 1.0], atol=1e-12)


def test_epr_marginal_variance():
    cm = gc.epr_source(20.0)
    assert cm[0, 0] == cm[2, 2] == 20.0
    np.testing.assert_allclose(gc.symplectic_eigenvalues(cm), [1.0, 1.0], atol=1e-10)


def test_epr_rejects_subvacuum():
    with pytest.raises(gc.DomainError):
        gc.epr_source(0.9)


def test_compose_examples():
    assert np.array_equal(gc.compose([gc.vacuum(1), gc.vacuum(1)]), np.eye(4))
    assert np.array_equal(gc.compose([gc.epr_source(2)]), gc.epr_source(2))
    cm = gc.compose([gc.epr_source(2), gc.vacuum(1)])
    assert cm.shape == (6, 6)
    assert not cm[:4, 4:].any()


# --- couplers and channels -------------------------------------------------------


def test_beam_splitter_identity_and_swap():
    cm = gc.compose([gc.thermal(3.0), gc.thermal(7.0)])
    np.testing.assert_allclose(gc.beam_splitter(cm, 0, 1, 1.0), cm)
    swapped = gc.beam_splitter(cm, 0, 1, 0.0)
    assert swapped[0, 0] == pytest.approx(7.0) and swapped[2, 2] == pytest.approx(3.0)


def test_beam_splitter_half_mix_of_epr_arm():
    cm = gc.compose([gc.epr_source(2.0), gc.vacuum(1)])
    out = gc.beam_splitter(cm, 0, 2, 0.5)
    assert out[0, 0] == pytest.approx(1.5, abs=1e-14)


def test_beam_splitter_rejects_same_mode():
    with pytest.raises(gc.DomainError):
        gc.beam_splitter(gc.vacuum(2), 1, 1, 0.5)


@pytest.mark.parametrize(
    "variance, eta, eps, expected",
    [(21.0, 0.01, 0.0, 1.2), (10.0, 0.1, 0.5, 1.95), (5.0, 1.0, 0.0, 5.0)],
)
def test_loss_channel_output_variance(variance, eta, eps, expected):
    out = gc.loss_channel(gc.thermal(variance), 0, eta, eps)
    np.testing.assert_allclose(out, expected * np.eye(2), atol=1e-14)


def test_loss_channel_rejects_zero_transmittivity():
    with pytest.raises(gc.DomainError):
        gc.loss_channel(gc.vacuum(1), 0, 0.0)


@pytest.mark.parametrize("start, noise, expected", [(1.0, 0.33, 1.33), (20.0, 1.0, 21.0), (4.0, 0.0, 4.0)])
def test_additive_noise(start, noise, expected):
    out = gc.add_phase_insensitive_noise(gc.thermal(start), 0, noise)
    np.testing.assert_allclose(np.diag(out), [expected, expected], atol=1e-14)


# --- spectra and entropies -------------------------------------------------------


def test_spectrum_examples():
    np.testing.assert_allclose(gc.symplectic_eigenvalues(gc.vacuum(3)), [1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(gc.symplectic_eigenvalues(gc.epr_source(5.0)), [1, 1], atol=1e-12)
    assert gc.symplectic_eigenvalues(np.diag([2.0, 4.5]))[0] == pytest.approx(3.0)


def test_spectrum_rejects_asymmetric_matrix():
    cm = np.eye(2)
    cm[0, 1] = 0.1
    with pytest.raises(gc.DomainError):
        gc.symplectic_eigenvalues(cm)


@pytest.mark.parametrize("variance, bits", [(3.0, 2.0), (2.0, 1.5 * math.log2(1.5) + 0.5), (1.0, 0.0)])
def test_thermal_entropy(variance, bits):
    assert gc.von_neumann_entropy(gc.thermal(variance)) == pytest.approx(bits, abs=1e-12)


def test_g_function_cutoff():
    assert gc.g_function(0.0) == 0.0
    assert gc.g_function(1e-13) == 0.0
    assert gc.g_function(1.0) == pytest.approx(2.0)


def test_entropy_of_pure_states_vanishes():
    cm = gc.beam_splitter(gc.compose([gc.epr_source(30.0), gc.epr_source(4.0)]), 1, 2, 0.3)
    assert gc.von_neumann_entropy(cm) < 1e-9


# --- measurements ----------------------------------------------------------------


def test_homodyne_on_uncorrelated_mode_leaves_rest():
    cm = gc.compose([gc.epr_source(3.0), gc.thermal(2.0)])
    np.testing.assert_allclose(gc.homodyne_condition(cm, 2, "x"), gc.epr_source(3.0))


def test_homodyne_on_epr_arm():
    out = gc.homodyne_condition(gc.epr_source(2.0), 1, "x")
    np.testing.assert_allclose(out, np.diag([0.5, 2.0]), atol=1e-14)
    assert gc.conditional_variance(gc.epr_source(2.0), 0, 1, "x") == pytest.approx(0.5)


@pytest.mark.parametrize("V", [1.0, 2.0, 10.0, 100.0])
def test_homodyne_conditional_variance_of_epr(V):
    out = gc.homodyne_condition(gc.epr_source(V), 1, "x")
    assert out[0, 0] == pytest.approx(1.0 / V, rel=1e-12)


def test_homodyne_p_quadrature_mirrors_x():
    out = gc.homodyne_condition(gc.epr_source(2.0), 1, "p")
    np.testing.assert_allclose(out, np.diag([2.0, 0.5]), atol=1e-14)


def test_degenerate_measurement_raises():
    cm = np.eye(4)
    cm[2, 2] = 0.0
    with pytest.raises(gc.DegenerateMeasurementError):
        gc.homodyne_condition(cm, 1, "x")


def test_conditional_variance_uncorrelated():
    cm = gc.compose([gc.thermal(4.0), gc.thermal(9.0)])
    assert gc.conditional_variance(cm, 0, 1, "x") == 4.0


# --- properties ------------------------------------------------------------------


def _schur_oracle(cm, measured, q):
    """Moore-Penrose form with X = diag(1, 0) on the measured mode."""
    n = cm.shape[0] // 2
    rest = [k for k in range(n) if k != measured]
    ri = np.array([[2 * k, 2 * k + 1] for k in rest]).ravel()
    mi = [2 * measured, 2 * measured + 1]
    proj = np.diag([1.0, 0.0]) if q == "x" else np.diag([0.0, 1.0])
    sigma = cm[np.ix_(ri, mi)]
    return cm[np.ix_(ri, ri)] - sigma @ np.linalg.pinv(proj @ cm[np.ix_(mi, mi)] @ proj) @ sigma.T


def test_homodyne_matches_pseudoinverse_oracle_on_random_states():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(100):
        cm, _ = random_state(3, rng)
        m, q = k % 3, "xp"[k % 2]
        worst = max(worst, np.abs(gc.homodyne_condition(cm, m, q) - _schur_oracle(cm, m, q)).max())
        t = (m + 1) % 3
        entry = gc.homodyne_condition(cm, m, q)
        idx = [0, 1, 2]
        idx.remove(m)
        pos = 2 * idx.index(t) + (0 if q == "x" else 1)
        assert abs(gc.conditional_variance(cm, t, m, q) - entry[pos, pos]) <= 1e-12 * max(1, abs(entry[pos, pos]))
    assert worst <= 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_spectrum_recovers_williamson_values(seed):
    rng = np.random.default_rng(seed)
    cm, nus = random_state(3, rng)
    np.testing.assert_allclose(gc.symplectic_eigenvalues(cm), nus, rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, t=st.floats(0.0, 1.0), eta=st.floats(0.01, 1.0), eps=st.floats(0.0, 2.0), noise=st.floats(0.0, 5.0))
def test_operations_preserve_physicality(seed, t, eta, eps, noise):
    rng = np.random.default_rng(seed)
    cm, _ = random_state(3, rng)
    for out in (
        gc.beam_splitter(cm, 0, 2, t),
        gc.loss_channel(cm, 1, eta, eps),
        gc.add_phase_insensitive_noise(cm, 2, noise),
        gc.homodyne_condition(cm, 0, "x"),
        gc.heterodyne_condition(cm, 1),
        gc.reduce_state(cm, [2, 0]),
    ):
        assert gc.is_physical(out)


@settings(max_examples=60, deadline=None)
@given(v1=st.floats(1.0, 1e3), v2=st.floats(1.0, 1e3), t=st.floats(0.0, 1.0))
def test_built_states_have_vacuum_bounded_diagonal(v1, v2, t):
    cm = gc.beam_splitter(gc.compose([gc.epr_source(v1), gc.thermal(v2)]), 1, 2, t)
    assert np.diag(cm).min() >= 1 - 1e-9


@settings(max_examples=60, deadline=None)
@given(seed=seeds, t=st.floats(0.0, 1.0), pure=st.booleans())
def test_beam_splitter_preserves_spectrum(seed, t, pure):
    rng = np.random.default_rng(seed)
    cm, _ = random_state(3, rng, thermal=not pure)
    before = gc.symplectic_eigenvalues(cm)
    after = gc.symplectic_eigenvalues(gc.beam_splitter(cm, 1, 2, t))
    np.testing.assert_allclose(after, before, atol=1e-10 * before.max())


@settings(max_examples=100, deadline=None)
@given(seed=seeds, eta=st.floats(0.01, 0.99), eps=st.floats(0.0, 5.0))
def test_loss_channel_equals_cloner_ancilla(seed, eta, eps):
    rng = np.random.default_rng(seed)
    cm, _ = random_state(2, rng)
    n_var = 1.0 + eta * eps / (1.0 - eta)
    # thermal ancilla alone, and one arm of an EPR pair (the cloner), must both reproduce the channel
    via_thermal = gc.reduce_state(gc.beam_splitter(gc.compose([cm, gc.thermal(n_var)]), 1, 2, eta), [0, 1])
    via_epr = gc.reduce_state(gc.beam_splitter(gc.compose([cm, gc.epr_source(n_var)]), 1, 2, eta), [0, 1])
    direct = gc.loss_channel(cm, 1, eta, eps)
    np.testing.assert_allclose(via_thermal, direct, atol=1e-10)
    np.testing.assert_allclose(via_epr, direct, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_entropy_is_additive_over_compose(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_state(2, rng)
    b, _ = random_state(1, rng)
    total = gc.von_neumann_entropy(gc.compose([a, b]))
    assert total == pytest.approx(gc.von_neumann_entropy(a) + gc.von_neumann_entropy(b), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_conditioning_depends_only_on_second_moments(seed):
    # conditioning a state, then one of its marginals, commutes with discarding unrelated modes
    rng = np.random.default_rng(seed)
    cm, _ = random_state(3, rng)
    full = gc.homodyne_condition(cm, 2, "x")
    np.testing.assert_allclose(gc.reduce_state(full, [0]), gc.homodyne_condition(gc.reduce_state(cm, [0, 2]), 1, "x"), atol=1e-10)


def test_symplectic_form_is_a_copy():
    om = gc.symplectic_form(2)
    om[0, 1] = 5.0
    assert gc.symplectic_form(2)[0, 1] == 1.0
