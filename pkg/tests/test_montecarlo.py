"""Thermal-motion sampling and the Monte-Carlo error budget."""

import numpy as np
import pytest
from scipy import constants

from rydcz.fidelity import cz_fidelity
from rydcz.hilbert import propagate
from rydcz.montecarlo import (
    RB87_MASS,
    BeamConfig,
    BeamStep,
    MonteCarloConfig,
    TrapConfig,
    doppler_shift,
    local_rabi_scale,
    run_montecarlo,
    single_photon_beams,
    sweep_depth,
    sweep_temperature,
    thermal_shot,
    thermal_sigmas,
    trap_frequencies,
    two_photon_beams,
)
from rydcz.pulses import preset

from conftest import single_photon_system

TRAP = TrapConfig()  # 850 nm, w0 = 1 um, 100 uK, 87Rb


def test_trap_frequencies_frozen_values():
    # Harmonic expansion of U0 exp(-2 r^2/w0^2) / (1 + z^2/zR^2):
    # omega_r = sqrt(4 U0 / (M w0^2)), omega_z = sqrt(2 U0 / (M zR^2)).
    omega_r, omega_z = trap_frequencies(TRAP)
    assert omega_r / (2 * np.pi * 1e3) == pytest.approx(31.133962, rel=1e-6)
    assert omega_z / (2 * np.pi * 1e3) == pytest.approx(5.956463, rel=1e-6)
    # Scaling: frequencies go as sqrt(depth).
    deep = trap_frequencies(TrapConfig(depth_uK=400.0))
    assert deep[0] == pytest.approx(2 * omega_r, rel=1e-12)
    assert deep[1] == pytest.approx(2 * omega_z, rel=1e-12)


def test_rayleigh_lengths_frozen_values():
    for lam, zr_um in ((420e-9, 7.479983), (1013e-9, 3.101276),
                       (780e-9, 4.027683), (480e-9, 6.544985)):
        assert BeamStep(lam).rayleigh_length * 1e6 == pytest.approx(zr_um, rel=1e-6)


def test_thermal_sigmas_frozen_and_scaling():
    sigma_r, sigma_z, sigma_v = thermal_sigmas(TRAP, 5.0)
    assert sigma_v == pytest.approx(0.0218710315, rel=1e-8)
    # Equipartition: sigma_x = sigma_v / omega.
    omega_r, omega_z = trap_frequencies(TRAP)
    assert sigma_r == pytest.approx(sigma_v / omega_r, rel=1e-12)
    assert sigma_z == pytest.approx(sigma_v / omega_z, rel=1e-12)
    assert sigma_z > sigma_r  # axial confinement is weaker
    four = thermal_sigmas(TRAP, 20.0)
    assert np.allclose(four, 2.0 * np.array([sigma_r, sigma_z, sigma_v]), rtol=1e-12)
    assert thermal_sigmas(TRAP, 0.0) == (0.0, 0.0, 0.0)


def test_rb87_mass_value():
    assert RB87_MASS == pytest.approx(86.909180527 * constants.atomic_mass, rel=1e-12)
    assert RB87_MASS == pytest.approx(1.4431606e-25, rel=1e-6)


def test_local_rabi_scale_profile():
    step = BeamStep(480e-9, waist=1e-6)
    assert local_rabi_scale(step, (0, 0, 0)) == 1.0
    # One waist off-axis: the field envelope exp(-r^2/w^2).
    assert local_rabi_scale(step, (1e-6, 0, 0)) == pytest.approx(np.exp(-1.0))
    assert local_rabi_scale(step, (0.6e-6, 0.8e-6, 0)) == pytest.approx(np.exp(-1.0))
    # Axial falloff from beam divergence.
    zr = step.rayleigh_length
    assert local_rabi_scale(step, (0, 0, zr)) == pytest.approx(np.exp(-0.5))
    assert local_rabi_scale(step, (0, 0, np.sqrt(2.0) * zr)) == pytest.approx(np.exp(-1.0))
    assert local_rabi_scale(step, (0, 0, -zr)) == local_rabi_scale(step, (0, 0, zr))


def test_effective_wavenumbers_frozen_values():
    k_single = single_photon_beams(297e-9).effective_wavenumber
    assert k_single / (2 * np.pi * 1e6) == pytest.approx(3.3670034, rel=1e-6)
    k_counter = two_photon_beams(420e-9, 1013e-9).effective_wavenumber
    assert abs(k_counter) / (2 * np.pi * 1e6) == pytest.approx(1.3937855, rel=1e-6)
    k_small = two_photon_beams(780e-9, 480e-9).effective_wavenumber
    assert abs(k_small) / (2 * np.pi * 1e6) == pytest.approx(0.8012821, rel=1e-6)
    # The 780/480 pair cancels more of the photon momentum.
    assert abs(k_small) < abs(k_counter) < k_single
    k_co = two_photon_beams(420e-9, 1013e-9, counterpropagating=False).effective_wavenumber
    assert k_co > k_single  # copropagating pairs add


def test_doppler_shift_frozen_value_and_sign():
    beams = single_photon_beams(297e-9)
    assert doppler_shift(beams, (0, 0, 0.022)) == pytest.approx(465421.13, rel=1e-6)
    assert doppler_shift(beams, (0, 0, -0.022)) == -doppler_shift(beams, (0, 0, 0.022))
    # Transverse motion does not shift the resonance.
    assert doppler_shift(beams, (5.0, 5.0, 0.0)) == 0.0


def test_thermal_shot_determinism_and_crn():
    beams = single_photon_beams()
    a = thermal_shot(7, 42, TRAP, 5.0, beams)
    b = thermal_shot(7, 42, TRAP, 5.0, beams)
    assert a == b
    c = thermal_shot(7, 43, TRAP, 5.0, beams)
    assert a != c
    # Common random numbers: the same shot at 4x the temperature has
    # exactly twice the excursions.
    hot = thermal_shot(7, 42, TRAP, 20.0, beams)
    assert np.allclose(np.array(hot.positions), 2.0 * np.array(a.positions), rtol=1e-12)
    assert np.allclose(np.array(hot.velocities), 2.0 * np.array(a.velocities), rtol=1e-12)


def test_thermal_shot_zero_temperature_is_static():
    beams = single_photon_beams()
    shot = thermal_shot(123, 0, TRAP, 0.0, beams)
    assert np.all(np.array(shot.positions) == 0.0)
    assert np.all(np.array(shot.velocities) == 0.0)
    assert shot.rabi_scales == ((1.0,), (1.0,))
    assert shot.doppler_shifts == (0.0, 0.0)


def test_beam_offset_enters_rabi_scale():
    offset = (0.5e-6, 0.0, 0.0)
    beams = BeamConfig(steps=(BeamStep(297e-9),), static_offset=offset)
    shot = thermal_shot(5, 0, TRAP, 0.0, beams)
    assert shot.rabi_scales[0][0] == pytest.approx(np.exp(-0.25))


def test_montecarlo_config_validation(robust_rect):
    with pytest.raises(ValueError):
        MonteCarloConfig(robust_rect, 1e-7, 5.0, 0, 1)
    with pytest.raises(ValueError):
        MonteCarloConfig(robust_rect, 1e-7, -1.0, 10, 1)
    with pytest.raises(ValueError):
        MonteCarloConfig(robust_rect, 0.0, 5.0, 10, 1)


def test_zero_temperature_reproduces_static_gate(time_optimal):
    cfg = MonteCarloConfig(
        pulse=time_optimal, gate_duration_phys=100e-9, temperature_uK=0.0,
        shots=3, master_seed=9,
    )
    res = run_montecarlo(cfg, TRAP, single_photon_beams(297e-9), steps=1024)
    static = cz_fidelity(
        propagate(single_photon_system(time_optimal), time_optimal, steps=1024)
    ).infidelity
    assert res.mean_infidelity == pytest.approx(static, rel=1e-12)
    assert res.std_error == 0.0
    assert res.failed_shots == 0


def test_montecarlo_is_jobs_invariant(robust_rect):
    cfg = MonteCarloConfig(
        pulse=robust_rect, gate_duration_phys=100e-9, temperature_uK=5.0,
        shots=25, master_seed=31, keep_shots=True,
    )
    beams = single_photon_beams(297e-9)
    r1 = run_montecarlo(cfg, TRAP, beams, steps=512, jobs=1)
    r2 = run_montecarlo(cfg, TRAP, beams, steps=512, jobs=3)
    assert r1.per_shot == r2.per_shot  # bit-exact reassembly
    assert r1.mean_infidelity == r2.mean_infidelity
    assert r1.std_error == r2.std_error


def test_montecarlo_statistics_match_per_shot_sample(time_optimal):
    cfg = MonteCarloConfig(
        pulse=time_optimal, gate_duration_phys=100e-9, temperature_uK=5.0,
        shots=40, master_seed=11, keep_shots=True,
    )
    res = run_montecarlo(cfg, TRAP, single_photon_beams(297e-9), steps=512)
    sample = np.array([infid for _, infid in res.per_shot])
    assert res.shots == 40 and len(sample) == 40
    assert res.mean_infidelity == pytest.approx(float(np.mean(sample)), rel=1e-15)
    assert res.std_error == pytest.approx(
        float(np.std(sample, ddof=1) / np.sqrt(len(sample))), rel=1e-12
    )
    # Physical sanity: motion at 5 uK costs fidelity.
    static = cz_fidelity(
        propagate(single_photon_system(time_optimal), time_optimal, steps=512)
    ).infidelity
    assert res.mean_infidelity > 10 * static


def test_standard_error_shrinks_as_root_shots(time_optimal):
    results = []
    for shots in (100, 200):
        cfg = MonteCarloConfig(
            pulse=time_optimal, gate_duration_phys=100e-9, temperature_uK=5.0,
            shots=shots, master_seed=17,
        )
        results.append(
            run_montecarlo(cfg, TRAP, single_photon_beams(297e-9), steps=256)
        )
    ratio = results[0].std_error / results[1].std_error
    assert abs(ratio / np.sqrt(2.0) - 1.0) < 0.2


def test_temperature_sweep_uses_common_random_numbers(robust_rect):
    cfg = MonteCarloConfig(
        pulse=robust_rect, gate_duration_phys=100e-9, temperature_uK=5.0,
        shots=30, master_seed=13,
    )
    beams = single_photon_beams(297e-9)
    res = sweep_temperature(cfg, TRAP, beams, [0.0, 2.0, 8.0], steps=512)
    # CRN plus monotone per-shot excursions give a cleanly ordered curve
    # at small sample sizes.
    infid = [r.mean_infidelity for r in res]
    assert infid[0] < infid[1] < infid[2]
    # The sweep must leave the input config's temperature untouched.
    assert cfg.temperature_uK == 5.0


def test_depth_sweep_tightens_the_trap(robust_rect):
    cfg = MonteCarloConfig(
        pulse=robust_rect, gate_duration_phys=100e-9, temperature_uK=5.0,
        shots=30, master_seed=13,
    )
    beams = single_photon_beams(297e-9)
    res = sweep_depth(cfg, TRAP, beams, [50.0, 400.0], steps=512)
    # Deeper trap, tighter confinement, smaller inhomogeneity error at
    # fixed temperature. Velocities are depth-independent but the
    # position spread dominates here.
    assert res[1].mean_infidelity < res[0].mean_infidelity


def test_two_photon_montecarlo_requires_intermediate_detuning(robust_rect):
    cfg = MonteCarloConfig(
        pulse=robust_rect, gate_duration_phys=1e-6, temperature_uK=5.0,
        shots=2, master_seed=3,
    )
    with pytest.raises(ValueError):
        run_montecarlo(cfg, TRAP, two_photon_beams(420e-9, 1013e-9), steps=128)


def test_two_photon_montecarlo_zero_temperature_matches_embedding(robust_smooth):
    dp_phys = 2 * np.pi * 5.0e9
    cfg = MonteCarloConfig(
        pulse=robust_smooth, gate_duration_phys=1e-6, temperature_uK=0.0,
        shots=1, master_seed=0, intermediate_detuning_phys=dp_phys,
    )
    res = run_montecarlo(cfg, TRAP, two_photon_beams(420e-9, 1013e-9), steps=1024)
    from rydcz.scans import embedded_system, two_photon_embed

    omega_unit = robust_smooth.duration_T / 1e-6
    emb = two_photon_embed(robust_smooth, dp_phys / omega_unit)
    static = cz_fidelity(
        propagate(embedded_system(emb, cfg.blockade_TB), emb, steps=1024)
    ).infidelity
    assert res.mean_infidelity == pytest.approx(static, rel=1e-12)
