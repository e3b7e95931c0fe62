"""Robustness scans, CSV round trips, and the two-photon embedding."""

import numpy as np
import pytest

from rydcz.fidelity import cz_fidelity
from rydcz.hilbert import GateSystem, LevelScheme, propagate
from rydcz.pulses import preset
from rydcz.scans import (
    LIFETIME_PRESETS,
    ScanResult,
    embedded_system,
    scan_alpha,
    scan_epsilon,
    scan_intermediate_detuning,
    scan_ramp,
    two_photon_embed,
)

from conftest import single_photon_system


def test_scan_result_validates_alignment():
    with pytest.raises(ValueError):
        ScanResult("epsilon", (0.0, 0.1), (1e-3,))
    with pytest.raises(ValueError):
        ScanResult("epsilon", (0.0,), (1.5,))  # infidelity beyond 1
    # NaN marks a failed point and is allowed.
    ScanResult("epsilon", (0.0,), (float("nan"),))


def test_scan_result_csv_round_trip(tmp_path):
    result = ScanResult("alpha", (-0.05, 0.0, 0.05), (1.25e-4, 2.5e-6, 1.5e-4))
    path = tmp_path / "curve.csv"
    result.write_csv(path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "axis,value,infidelity"
    assert "\r" not in text
    back = ScanResult.from_csv(path)
    assert back.axis_name == "alpha"
    assert back.axis_values == result.axis_values  # repr round-trips exactly
    assert back.infidelities == result.infidelities


def test_scan_result_rejects_foreign_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        ScanResult.from_csv(path)
    path.write_text("axis,value,infidelity\nepsilon,0.0,1e-3\nalpha,0.0,1e-3\n",
                    encoding="utf-8")
    with pytest.raises(ValueError):
        ScanResult.from_csv(path)


def test_scan_points_are_independent(robust_rect):
    # Batched evaluation must give the same numbers as one-point scans.
    system = single_photon_system(robust_rect)
    eps = [-0.04, 0.0, 0.03]
    batched = scan_epsilon(robust_rect, eps, system, steps=512)
    for e, f in zip(eps, batched.infidelities):
        single = scan_epsilon(robust_rect, [e], system, steps=512)
        assert single.infidelities[0] == f


def test_epsilon_zero_matches_plain_propagation(robust_rect):
    system = single_photon_system(robust_rect)
    scan = scan_epsilon(robust_rect, [0.0], system, steps=1024)
    direct = cz_fidelity(propagate(system, robust_rect, steps=1024)).infidelity
    assert scan.infidelities[0] == pytest.approx(direct, abs=1e-14)


def test_alpha_zero_equals_epsilon_zero(time_optimal):
    system = single_photon_system(time_optimal)
    a = scan_alpha(time_optimal, [0.0], system, steps=512).infidelities[0]
    e = scan_epsilon(time_optimal, [0.0], system, steps=512).infidelities[0]
    assert a == e


def test_ramp_zero_is_the_unperturbed_gate(robust_rect):
    system = single_photon_system(robust_rect)
    r = scan_ramp(robust_rect, [0.0], system, steps=512).infidelities[0]
    e = scan_epsilon(robust_rect, [0.0], system, steps=512).infidelities[0]
    assert r == pytest.approx(e, abs=1e-14)


def test_failed_points_become_nan(robust_rect):
    class Broken:
        duration_T = robust_rect.duration_T

        def breakpoints(self):
            return ()

        def sample(self, t):
            raise FloatingPointError("synthetic failure")

    from rydcz.scans import _infidelities

    system = single_photon_system(robust_rect)
    out = _infidelities([system, system], [robust_rect, Broken()], [None, None],
                        steps=256)
    assert np.isfinite(out[0])
    assert np.isnan(out[1])


def test_frozen_scan_regression_values(robust_rect, time_optimal):
    # Default-resolution infidelities of the bundled pulses; guards the
    # integrator, the fidelity metric, and the preset data together.
    system_rr = single_photon_system(robust_rect)
    rr = scan_epsilon(robust_rect, [-0.05, 0.0, 0.05], system_rr)
    assert rr.infidelities[1] == pytest.approx(2.5950e-06, rel=1e-3)
    assert rr.infidelities[0] == pytest.approx(1.3924e-05, rel=2e-2)
    assert rr.infidelities[2] == pytest.approx(1.3838e-05, rel=2e-2)
    system_to = single_photon_system(time_optimal)
    to = scan_epsilon(time_optimal, [0.0], system_to)
    assert to.infidelities[0] == pytest.approx(3.006e-09, rel=5e-2)


# ---------------------------------------------------------------------------
# Two-photon embedding
# ---------------------------------------------------------------------------


def test_embedding_balances_light_shifts(robust_rect):
    # Equal step amplitudes Omega_P = Omega_S make the intermediate-state
    # light shifts of |1> and |r> cancel; the embedded drive reproduces
    # the effective Rabi frequency Omega_P * Omega_S / (2 Delta_P).
    dp = 300.0
    emb = two_photon_embed(robust_rect, dp)
    t = np.linspace(0.0, robust_rect.duration_T, 64)
    s = emb.sample(t)
    assert np.allclose(np.asarray(s.rabi_1), np.asarray(s.rabi_p_1))
    eff = np.asarray(s.rabi_1) * np.asarray(s.rabi_p_1) / (2.0 * dp)
    assert np.allclose(eff, robust_rect.amplitude_at(t), atol=1e-12)
    assert np.allclose(np.asarray(s.phase), robust_rect.phase_at(t))


def test_embedding_rejects_negative_envelope(robust_rect):
    emb = two_photon_embed(robust_rect.with_ramp(-3.0), 300.0)
    with pytest.raises(ValueError):
        emb.sample(np.linspace(0.0, robust_rect.duration_T, 32))
    with pytest.raises(ValueError):
        two_photon_embed(robust_rect, -5.0)


def test_embedding_approaches_single_photon_gate(robust_smooth):
    # Adiabatic elimination: at large intermediate detuning the embedded
    # 16-level propagation converges to the 9-level result.
    system = single_photon_system(robust_smooth)
    target = cz_fidelity(propagate(system, robust_smooth, steps=2048)).infidelity
    gaps = []
    for product in (500.0, 5000.0):
        dp = 2.0 * np.pi * product / robust_smooth.duration_T
        emb = two_photon_embed(robust_smooth, dp)
        r = cz_fidelity(propagate(embedded_system(emb, 1.0e4), emb, steps=2048))
        gaps.append(abs(r.infidelity - target))
    assert gaps[1] < gaps[0]  # larger detuning, smaller embedding error
    assert gaps[1] < 5e-4


def test_lifetime_scan_requires_positive_inputs(robust_rect):
    with pytest.raises(ValueError):
        scan_intermediate_detuning(robust_rect, [2 * np.pi * 1e9], {"tau_p": 0.0, "tau_r": 1.0},
                                   gate_duration_phys=1e-7)
    with pytest.raises(ValueError):
        scan_intermediate_detuning(robust_rect, [-1.0], {"tau_p": 1e-8, "tau_r": 1e-4},
                                   gate_duration_phys=1e-7)


def test_lifetime_scan_decay_costs_fidelity(levine_pichler):
    # With finite lifetimes the infidelity must exceed the lossless value,
    # and a longer-lived intermediate state must do better at fixed Delta_P.
    taus = LIFETIME_PRESETS
    assert taus["6P3/2"] > taus["5P3/2"]
    dp = [2.0 * np.pi * 3.0e9]
    base = dict(gate_duration_phys=100e-9, steps=2048)
    short = scan_intermediate_detuning(
        levine_pichler, dp, {"tau_p": taus["5P3/2"], "tau_r": taus["80S"]}, **base
    ).infidelities[0]
    long = scan_intermediate_detuning(
        levine_pichler, dp, {"tau_p": taus["6P3/2"], "tau_r": taus["80S"]}, **base
    ).infidelities[0]
    assert long < short
    assert short > 1e-4


def test_metadata_written_next_to_csv(tmp_path, robust_rect):
    system = single_photon_system(robust_rect)
    scan = scan_epsilon(robust_rect, [0.0], system, steps=256)
    meta_path = tmp_path / "scan.meta.json"
    scan.write_metadata(meta_path)
    import json

    payload = json.loads(meta_path.read_text(encoding="utf-8"))
    assert payload["axis"] == "epsilon"
    assert payload["metadata"]["steps"] == 256
    assert payload["metadata"]["scheme"] == "SINGLE_PHOTON"
