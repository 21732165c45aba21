"""Tests for masker construction and masking verification."""

import json

import numpy as np
import pytest

from qmask.masklib import (
    Masker,
    apply_masker,
    diagonal_masker,
    hyperdisk_state,
    is_masked,
    load_masker,
    masker_from_images,
    masking_defect,
    orthonormal_span,
    save_masker,
    walgate_decompose,
)
from qmask.qcore import (
    DimProfile,
    PureState,
    cross_marginal,
    partial_trace,
    random_pure_state,
    trace_distance,
)

RT2 = 1.0 / np.sqrt(2.0)


def ket(*amps, dims=None):
    v = np.asarray(amps, dtype=complex)
    return PureState(v / np.linalg.norm(v), DimProfile(dims or (v.size,)))


def phase_state(*phases):
    d = len(phases)
    return hyperdisk_state(np.full(d, 1.0 / np.sqrt(d)), phases)


def swap_masker():
    """Product-image masker |k> -> |0>|k>: hides A trivially by moving it to B."""
    return masker_from_images([ket(1, 0, 0, 0, dims=(2, 2)), ket(0, 1, 0, 0, dims=(2, 2))])


# -- constructors ------------------------------------------------------------


def test_diagonal_masker_images():
    v = diagonal_masker(2)
    np.testing.assert_allclose(v.image(0).amps, [1, 0, 0, 0], atol=0)
    np.testing.assert_allclose(v.image(1).amps, [0, 0, 0, 1], atol=0)
    with pytest.raises(ValueError):
        diagonal_masker(1)


def test_diagonal_masker_on_plus_gives_bell():
    out = apply_masker(diagonal_masker(2), ket(1, 1))
    np.testing.assert_allclose(out.amps, [RT2, 0, 0, RT2], atol=1e-15)


@pytest.mark.parametrize("phi", [0.0, 0.3, np.pi / 2, -2.0])
def test_diagonal_masker_d3_marginals_maximally_mixed(phi):
    psi = phase_state(0.0, phi, 0.0)
    image = apply_masker(diagonal_masker(3), psi)
    for side in (0, 1):
        assert trace_distance(partial_trace(image, side).mat, np.eye(3) / 3) < 1e-12


def test_masker_from_images_matches_diagonal():
    v = masker_from_images([ket(1, 0, 0, 0, dims=(2, 2)), ket(0, 0, 0, 1, dims=(2, 2))])
    np.testing.assert_allclose(v.iso, diagonal_masker(2).iso, atol=0)


def test_masker_from_images_classical_bit_marginals():
    v = masker_from_images([ket(1, 0, 0, 1, dims=(2, 2)), ket(1, 0, 0, -1, dims=(2, 2))])
    for k in (0, 1):
        for side in (0, 1):
            assert trace_distance(partial_trace(v.image(k), side).mat, np.eye(2) / 2) < 1e-12


def test_masker_from_images_rejects_nonorthonormal():
    with pytest.raises(ValueError):
        masker_from_images([ket(1, 0, 0, 0, dims=(2, 2)), ket(1, 0, 0, 0, dims=(2, 2))])
    with pytest.raises(ValueError):
        masker_from_images([ket(1, 0, 0, 0, dims=(2, 2)), ket(0, 0, 0, 1, dims=(2, 3))])


def test_swap_style_images_fail_on_b_side():
    # valid isometry, but the B marginals reveal the input
    v = swap_masker()
    report = masking_defect(v, [ket(1, 0), ket(0, 1)], mode="set")
    devs = {i: (da, db) for i, da, db in report.per_state_deviation}
    assert devs[0] == (0.0, 0.0)
    assert devs[1][0] < 1e-12 and abs(devs[1][1] - 1.0) < 1e-12
    assert not report.verdict


def test_apply_masker_linearity_and_dim_check():
    v = diagonal_masker(2)
    a, b = 0.6, 0.8j
    lin = a * apply_masker(v, ket(1, 0)).amps + b * apply_masker(v, ket(0, 1)).amps
    direct = apply_masker(v, PureState(np.array([a, b]), DimProfile((2,)))).amps
    np.testing.assert_allclose(direct, lin, atol=1e-12)
    with pytest.raises(ValueError):
        apply_masker(v, ket(1, 0, 0))


def test_apply_masker_classical_bit_on_one():
    from qmask.protocols import classical_bit_masker

    out = apply_masker(classical_bit_masker(), ket(0, 1))
    np.testing.assert_allclose(out.amps, [RT2, 0, 0, -RT2], atol=1e-15)


def test_isometry_preserves_norm_on_random_inputs():
    v = diagonal_masker(4)
    for seed in range(100):
        psi = random_pure_state(4, seed)
        assert abs(np.linalg.norm(apply_masker(v, psi).amps) - 1.0) < 1e-10


# -- hyperdisk states ----------------------------------------------------------


def test_hyperdisk_examples():
    np.testing.assert_allclose(phase_state(0.0, 0.0).amps, [RT2, RT2], atol=1e-15)
    np.testing.assert_allclose(phase_state(0.0, np.pi).amps, [RT2, -RT2], atol=1e-15)
    s3 = 1.0 / np.sqrt(3.0)
    out = hyperdisk_state([s3, s3, s3], [0.0, np.pi / 2, np.pi])
    np.testing.assert_allclose(out.amps, [s3, 1j * s3, -s3], atol=1e-15)


def test_hyperdisk_rejects_bad_amplitudes():
    with pytest.raises(ValueError):
        hyperdisk_state([1.0, 1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        hyperdisk_state([1.0], [0.0, 0.0])


# -- orthonormal span -----------------------------------------------------------


def test_orthonormal_span_pivots_and_drops():
    cols = np.stack([[RT2, RT2], [RT2 * 1j / RT2 / 2 + 0.5, 0.5j]], axis=1)
    # simple well-conditioned case: two independent columns
    cols = np.array([[RT2, RT2], [RT2, -RT2]]).T.astype(complex)
    basis = orthonormal_span(cols)
    assert basis.shape == (2, 2)
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(2), atol=1e-12)
    # duplicated direction collapses to one basis vector
    one = orthonormal_span(np.stack([[1, 0], [1, 0]], axis=1).astype(complex))
    assert one.shape == (2, 1)


def test_orthonormal_span_spans_inputs():
    rng = np.random.default_rng(2)
    cols = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    basis = orthonormal_span(cols)
    proj = basis @ basis.conj().T
    np.testing.assert_allclose(proj @ cols, cols, atol=1e-10)


# -- masking defect ---------------------------------------------------------------


def test_defect_sharp_on_disk_triple_span():
    v = diagonal_masker(2)
    states = [phase_state(0.0, p) for p in (0.0, np.pi / 2, np.pi)]
    report = masking_defect(v, states, mode="span")
    assert report.defect < 1e-12
    assert report.verdict
    assert report.cross_norms  # span basis has two directions
    np.testing.assert_allclose(report.reference_marginal_a.mat, np.eye(2) / 2, atol=1e-12)


def test_defect_sharp_set_mode_zero_plus():
    report = masking_defect(diagonal_masker(2), [ket(1, 0), ket(1, 1)], mode="set")
    assert abs(report.defect - 0.5) < 1e-12
    assert report.cross_norms == ()
    assert not report.verdict


def test_defect_requires_states_and_matching_dims():
    with pytest.raises(ValueError):
        masking_defect(diagonal_masker(2), [], mode="set")
    with pytest.raises(ValueError):
        masking_defect(diagonal_masker(2), [ket(1, 0, 0)], mode="set")
    with pytest.raises(ValueError):
        masking_defect(diagonal_masker(2), [ket(1, 0)], mode="typo")


def test_is_masked_full_phase_family_d3():
    rng = np.random.default_rng(0)
    states = [phase_state(*rng.uniform(-np.pi, np.pi, size=3)) for _ in range(12)]
    ok, report = is_masked(diagonal_masker(3), states)
    assert ok and report.defect < 1e-11
    assert min(report.entropies) > 1.0  # images are genuinely entangled


def test_is_masked_rejects_swap_masker():
    ok, report = is_masked(swap_masker(), [ket(1, 0), ket(0, 1)])
    assert not ok
    assert max(report.entropies) < 1e-9  # product images carry no entanglement


def test_is_masked_rejects_tomographic_set():
    states = [ket(1, 0), ket(0, 1), ket(1, 1), ket(1, 1j)]
    ok, report = is_masked(diagonal_masker(2), states)
    assert not ok
    assert report.defect >= 0.5  # |+> image marginal I/2 vs reference |0><0|


def test_classical_bit_masker_masks_its_disk_span():
    # |0>,|1> lie on the |+/-> phase disk of the classical-bit masker
    from qmask.protocols import classical_bit_masker

    ok, report = is_masked(classical_bit_masker(), [ket(1, 0), ket(0, 1)])
    assert ok and report.defect < 1e-12


def test_theorem4_family_random_amplitudes():
    rng = np.random.default_rng(42)
    for d in range(2, 9):
        r = rng.uniform(0.2, 1.0, size=d)
        r /= np.linalg.norm(r)
        states = [hyperdisk_state(r, rng.uniform(-np.pi, np.pi, size=d)) for _ in range(50)]
        v = diagonal_masker(d)
        report = masking_defect(v, states, mode="span")
        assert report.defect < 1e-10
        for s in states:
            image = apply_masker(v, s)
            for side in (0, 1):
                assert trace_distance(partial_trace(image, side).mat, np.diag(r * r)) < 1e-10


def test_mixture_closure_on_masked_family():
    # mixing masked projectors leaves the image marginals untouched
    rng = np.random.default_rng(7)
    d = 3
    r = rng.uniform(0.3, 1.0, size=d)
    r /= np.linalg.norm(r)
    states = [hyperdisk_state(r, rng.uniform(-np.pi, np.pi, size=d)) for _ in range(5)]
    weights = rng.uniform(0.1, 1.0, size=5)
    weights /= weights.sum()
    v = diagonal_masker(d)
    rho = sum(w * np.outer(s.amps, s.amps.conj()) for w, s in zip(weights, states))
    joint = v.iso @ rho @ v.iso.conj().T
    reduced_a = joint.reshape(d, d, d, d).trace(axis1=1, axis2=3)
    reduced_b = joint.reshape(d, d, d, d).trace(axis1=0, axis2=2)
    np.testing.assert_allclose(reduced_a, np.diag(r * r), atol=1e-12)
    np.testing.assert_allclose(reduced_b, np.diag(r * r), atol=1e-12)


def test_sharp_basis_image_cross_marginals_vanish_exactly():
    v = diagonal_masker(3)
    for k in range(3):
        for j in range(3):
            if k == j:
                continue
            for side in ("A", "B"):
                x = cross_marginal(v.image(k), v.image(j), traced=side)
                assert np.all(x == 0)


# -- Walgate decomposition ---------------------------------------------------------


def walgate_bloch_oracle(psi0, psi1):
    """Analytic ancilla-basis solution via the Bloch vector of M0^dag M1."""
    d_a = psi0.dims.factors[0]
    m0 = psi0.amps.reshape(d_a, 2)
    m1 = psi1.amps.reshape(d_a, 2)
    k = m0.conj().T @ m1
    b = np.array([(k[0, 1] + k[1, 0]) / 2, (k[1, 0] - k[0, 1]) / 2j, k[0, 0]])
    n = np.cross(b.real, b.imag)
    if np.linalg.norm(n) < 1e-12:
        # degenerate: any direction orthogonal to the real span works
        ref = b.real if np.linalg.norm(b.real) > np.linalg.norm(b.imag) else b.imag
        if np.linalg.norm(ref) < 1e-15:
            n = np.array([0.0, 0.0, 1.0])
        else:
            trial = np.cross(ref, [1.0, 0.0, 0.0])
            if np.linalg.norm(trial) < 1e-12:
                trial = np.cross(ref, [0.0, 1.0, 0.0])
            n = trial
    n /= np.linalg.norm(n)
    theta = np.arccos(np.clip(n[2], -1, 1))
    phi = np.arctan2(n[1], n[0])
    x = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    assert abs(x.conj() @ k @ x) < 1e-10
    return x.conj()  # the ancilla basis vector beta0


def check_walgate(dec, psi0, psi1, atol=1e-8):
    d_a = psi0.dims.factors[0]
    b0, b1 = dec.basis_b[:, 0], dec.basis_b[:, 1]
    np.testing.assert_allclose(dec.basis_b.conj().T @ dec.basis_b, np.eye(2), atol=1e-10)
    rebuilt0 = (np.outer(dec.mu, b0) + np.outer(dec.nu, b1)).reshape(-1)
    rebuilt1 = (np.outer(dec.mu_perp, b0) + np.outer(dec.nu_perp, b1)).reshape(-1)
    np.testing.assert_allclose(rebuilt0, psi0.amps, atol=atol)
    np.testing.assert_allclose(rebuilt1, psi1.amps, atol=atol)
    assert abs(np.vdot(dec.mu, dec.mu_perp)) < atol
    assert abs(np.vdot(dec.nu, dec.nu_perp)) < atol


def test_walgate_bell_pair():
    psi0 = ket(1, 0, 0, 1, dims=(2, 2))
    psi1 = ket(1, 0, 0, -1, dims=(2, 2))
    dec = walgate_decompose(psi0, psi1)
    check_walgate(dec, psi0, psi1, atol=1e-7)
    # the solution family is the equatorial (unbiased) ancilla bases
    np.testing.assert_allclose(np.abs(dec.basis_b), np.full((2, 2), RT2), atol=1e-6)
    for vec in (dec.mu, dec.nu, dec.mu_perp, dec.nu_perp):
        assert abs(np.linalg.norm(vec) - RT2) < 1e-6


def test_walgate_orthogonal_product_pair():
    psi0 = ket(1, 0, 0, 0, dims=(2, 2))
    psi1 = ket(0, 0, 0, 1, dims=(2, 2))
    dec = walgate_decompose(psi0, psi1)
    check_walgate(dec, psi0, psi1)


def test_walgate_plus_minus_products():
    psi0 = ket(1, 1, 0, 0, dims=(2, 2))  # |0>|+>
    psi1 = ket(0, 0, 1, -1, dims=(2, 2))  # |1>|->
    dec = walgate_decompose(psi0, psi1)
    check_walgate(dec, psi0, psi1)


def test_walgate_rejects_nonorthogonal():
    with pytest.raises(ValueError):
        walgate_decompose(ket(1, 0, 0, 0, dims=(2, 2)), ket(1, 0, 0, 0, dims=(2, 2)))


@pytest.mark.parametrize("seed", range(12))
def test_walgate_random_pairs_match_invariants_and_oracle(seed):
    rng = np.random.default_rng(seed)
    d_a = int(rng.integers(2, 5))
    a = random_pure_state(2 * d_a, seed=seed + 300).amps
    b = random_pure_state(2 * d_a, seed=seed + 600).amps
    b = b - a * np.vdot(a, b)
    b /= np.linalg.norm(b)
    psi0 = PureState(a, DimProfile((d_a, 2)))
    psi1 = PureState(b, DimProfile((d_a, 2)))
    dec = walgate_decompose(psi0, psi1)
    assert dec.residual < 1e-12
    check_walgate(dec, psi0, psi1)
    # the analytic oracle confirms a zero-residual basis exists
    beta0 = walgate_bloch_oracle(psi0, psi1)
    m0 = psi0.amps.reshape(d_a, 2)
    m1 = psi1.amps.reshape(d_a, 2)
    assert abs(np.vdot(m0 @ beta0.conj(), m1 @ beta0.conj())) < 1e-8


# -- masker file format ---------------------------------------------------------


def test_masker_roundtrip(tmp_path):
    v = diagonal_masker(3)
    path = tmp_path / "masker.json"
    save_masker(v, path)
    data = json.loads(path.read_text())
    assert data["dA"] == 3 and data["dB"] == 3
    w = load_masker(path)
    np.testing.assert_allclose(w.iso, v.iso, atol=0)
    assert w.dims == (3, 3)


def test_masker_validation():
    with pytest.raises(ValueError):
        Masker(np.ones((4, 2), dtype=complex), (2, 2))
    with pytest.raises(ValueError):
        Masker(np.eye(4, 2, dtype=complex), (2, 3))
