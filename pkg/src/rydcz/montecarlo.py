"""Gate error budgets from thermal atomic motion in optical tweezers.

Each shot draws frozen Gaussian-distributed positions and velocities
for both atoms from the harmonic-trap statistics, converts them into
per-atom (and per-excitation-step) Rabi scalings via the Gaussian beam
profile and into Doppler detuning shifts via the axial velocity, then
propagates the full two-atom system with those modifiers and scores
the CZ fidelity. Randomness is keyed per shot by a counter-based
generator, so results are independent of execution order and worker
count, and sweeps over temperature or trap depth reuse the same unit
draws (common random numbers).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import constants

from .hilbert import DriveModifiers, GateSystem, LevelScheme
from .pulses import PulseProfile
from .scans import _infidelities, embedded_system, two_photon_embed

__all__ = [
    "RB87_MASS",
    "TrapConfig",
    "BeamStep",
    "BeamConfig",
    "single_photon_beams",
    "two_photon_beams",
    "ThermalShot",
    "MonteCarloConfig",
    "MonteCarloResult",
    "trap_frequencies",
    "thermal_sigmas",
    "local_rabi_scale",
    "doppler_shift",
    "thermal_shot",
    "run_montecarlo",
    "sweep_temperature",
    "sweep_depth",
]

RB87_MASS = 86.909180527 * constants.atomic_mass


@dataclass(frozen=True)
class TrapConfig:
    """Optical tweezer parameters; depth is |U0|/kB in microkelvin."""

    wavelength: float = 850.0e-9
    waist_w0: float = 1.0e-6
    depth_uK: float = 100.0
    atom_mass: float = RB87_MASS
    separation_d: float = 4.0e-6

    def __post_init__(self) -> None:
        for name in ("wavelength", "waist_w0", "depth_uK", "atom_mass", "separation_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class BeamStep:
    """One excitation beam, propagating along +/- z."""

    wavelength: float
    waist: float = 1.0e-6
    propagation_sign: int = 1

    def __post_init__(self) -> None:
        if self.wavelength <= 0 or self.waist <= 0:
            raise ValueError("wavelength and waist must be positive")
        if self.propagation_sign not in (1, -1):
            raise ValueError("propagation_sign must be +1 or -1")

    @property
    def rayleigh_length(self) -> float:
        return np.pi * self.waist**2 / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class BeamConfig:
    """Excitation geometry: one step (single-photon) or two (two-photon),
    plus a static pointing offset of the beam axes from the trap center."""

    steps: tuple[BeamStep, ...]
    static_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if len(self.steps) not in (1, 2):
            raise ValueError("one beam step (single-photon) or two (two-photon)")

    @property
    def scheme(self) -> LevelScheme:
        return LevelScheme.SINGLE_PHOTON if len(self.steps) == 1 else LevelScheme.TWO_PHOTON

    @property
    def effective_wavenumber(self) -> float:
        """Signed sum of step wavenumbers along +z; counterpropagating
        steps partially cancel."""
        return sum(s.propagation_sign * s.wavenumber for s in self.steps)


def single_photon_beams(wavelength: float = 297.0e-9, waist: float = 1.0e-6) -> BeamConfig:
    return BeamConfig(steps=(BeamStep(wavelength, waist),))


def two_photon_beams(
    wavelength_first: float,
    wavelength_second: float,
    waist: float = 1.0e-6,
    counterpropagating: bool = True,
) -> BeamConfig:
    return BeamConfig(
        steps=(
            BeamStep(wavelength_first, waist, 1),
            BeamStep(wavelength_second, waist, -1 if counterpropagating else 1),
        )
    )


def trap_frequencies(trap: TrapConfig) -> tuple[float, float]:
    """Radial and axial harmonic frequencies (rad/s) of the tweezer."""
    u0 = constants.k * trap.depth_uK * 1.0e-6
    omega_r = np.sqrt(4.0 * u0 / (trap.atom_mass * trap.waist_w0**2))
    z_r = np.pi * trap.waist_w0**2 / trap.wavelength
    omega_z = np.sqrt(2.0 * u0 / (trap.atom_mass * z_r**2))
    return float(omega_r), float(omega_z)


def thermal_sigmas(trap: TrapConfig, temperature_uK: float) -> tuple[float, float, float]:
    """Position spreads (radial, axial) and one-dimensional velocity spread."""
    if temperature_uK < 0:
        raise ValueError("temperature must be nonnegative")
    kbt = constants.k * temperature_uK * 1.0e-6
    omega_r, omega_z = trap_frequencies(trap)
    sigma_r = np.sqrt(kbt / trap.atom_mass) / omega_r
    sigma_z = np.sqrt(kbt / trap.atom_mass) / omega_z
    sigma_v = np.sqrt(kbt / trap.atom_mass)
    return float(sigma_r), float(sigma_z), float(sigma_v)


def local_rabi_scale(step: BeamStep, position: Sequence[float]) -> float:
    """Rabi amplitude relative to beam center at a position (already
    including any static beam offset)."""
    x, y, z = (float(c) for c in position)
    r2 = x * x + y * y
    z_r = step.rayleigh_length
    return float(np.exp(-r2 / step.waist**2) * np.exp(-z * z / (2.0 * z_r**2)))


def doppler_shift(beams: BeamConfig, velocity: Sequence[float]) -> float:
    """Detuning shift (rad/s) of the (two-photon) resonance for an atom
    moving with the given velocity; only the axial component counts."""
    return float(beams.effective_wavenumber * float(velocity[2]))


@dataclass(frozen=True)
class ThermalShot:
    """Frozen positions/velocities for one shot and the derived drive
    corrections (physical units)."""

    positions: tuple[tuple[float, float, float], ...]
    velocities: tuple[tuple[float, float, float], ...]
    rabi_scales: tuple[tuple[float, ...], ...]
    doppler_shifts: tuple[float, ...]


def _shot_rng(master_seed: int, shot_index: int) -> np.random.Generator:
    key = np.array([master_seed, shot_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _unit_draws(master_seed: int, shot_index: int) -> np.ndarray:
    """Unit normals for one shot, shape (2 atoms, 6): x, y, z, vx, vy, vz.

    Drawing unit variates and scaling by the sigmas afterwards gives
    common random numbers across temperature or depth sweep points.
    """
    return _shot_rng(master_seed, shot_index).standard_normal((2, 6))


def thermal_shot(
    master_seed: int,
    shot_index: int,
    trap: TrapConfig,
    temperature_uK: float,
    beams: BeamConfig,
) -> ThermalShot:
    sigma_r, sigma_z, sigma_v = thermal_sigmas(trap, temperature_uK)
    u = _unit_draws(master_seed, shot_index)
    positions = u[:, :3] * np.array([sigma_r, sigma_r, sigma_z])
    velocities = u[:, 3:] * sigma_v
    offset = np.asarray(beams.static_offset)
    scales = tuple(
        tuple(local_rabi_scale(step, positions[atom] + offset) for step in beams.steps)
        for atom in range(2)
    )
    shifts = tuple(doppler_shift(beams, velocities[atom]) for atom in range(2))
    return ThermalShot(
        positions=tuple(map(tuple, positions)),
        velocities=tuple(map(tuple, velocities)),
        rabi_scales=scales,
        doppler_shifts=shifts,
    )


@dataclass(frozen=True)
class MonteCarloConfig:
    """One Monte-Carlo point: pulse, physical duration, environment.

    ``intermediate_detuning_phys`` (rad/s) is required for two-photon
    beams. ``lifetimes`` as (tau_p, tau_r) in seconds enables decay;
    None leaves it off (motion-only error budget).
    """

    pulse: PulseProfile
    gate_duration_phys: float
    temperature_uK: float
    shots: int
    master_seed: int
    blockade_TB: float = 1.0e4
    intermediate_detuning_phys: Optional[float] = None
    lifetimes: Optional[tuple[float, float]] = None
    keep_shots: bool = False

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.temperature_uK < 0:
            raise ValueError("temperature must be nonnegative")
        if self.gate_duration_phys <= 0:
            raise ValueError("gate duration must be positive")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")


@dataclass
class MonteCarloResult:
    mean_infidelity: float
    std_error: float
    shots: int
    failed_shots: int
    metadata: dict = field(default_factory=dict)
    per_shot: Optional[tuple] = None


def _shot_modifiers(
    config: MonteCarloConfig,
    trap: TrapConfig,
    beams: BeamConfig,
    shot_index: int,
    omega_unit: float,
) -> tuple[ThermalShot, DriveModifiers]:
    shot = thermal_shot(
        config.master_seed, shot_index, trap, config.temperature_uK, beams
    )
    shifts = tuple(d / omega_unit for d in shot.doppler_shifts)
    if beams.scheme is LevelScheme.SINGLE_PHOTON:
        mods = DriveModifiers(
            rabi_scale=(shot.rabi_scales[0][0], shot.rabi_scales[1][0]),
            detuning_shift=shifts,
        )
    else:
        mods = DriveModifiers(
            rabi_scale=(shot.rabi_scales[0][1], shot.rabi_scales[1][1]),
            rabi_scale_first=(shot.rabi_scales[0][0], shot.rabi_scales[1][0]),
            detuning_shift=shifts,
        )
    return shot, mods


def _prepare(config: MonteCarloConfig, beams: BeamConfig):
    """Resolve the propagation pulse/system and the batching chunk."""
    omega_unit = config.pulse.duration_T / config.gate_duration_phys
    decay_p = decay_r = 0.0
    if config.lifetimes is not None:
        decay_p = (1.0 / config.lifetimes[0]) / omega_unit
        decay_r = (1.0 / config.lifetimes[1]) / omega_unit
    if beams.scheme is LevelScheme.SINGLE_PHOTON:
        pulse = config.pulse
        system = GateSystem(
            LevelScheme.SINGLE_PHOTON,
            blockade=config.blockade_TB / pulse.duration_T,
            decay_rate_r=decay_r,
        )
        chunk = 128
    else:
        if config.intermediate_detuning_phys is None:
            raise ValueError("two-photon beams require intermediate_detuning_phys")
        pulse = two_photon_embed(
            config.pulse, config.intermediate_detuning_phys / omega_unit
        )
        system = embedded_system(
            pulse,
            config.blockade_TB,
            decay_rate_p=decay_p,
            decay_rate_r=decay_r,
        )
        chunk = 16
    return pulse, system, omega_unit, chunk


def _mc_block(args) -> tuple[int, np.ndarray]:
    config, trap, beams, lo, hi, steps = args
    pulse, system, omega_unit, chunk = _prepare(config, beams)
    mods = [
        _shot_modifiers(config, trap, beams, i, omega_unit)[1] for i in range(lo, hi)
    ]
    n = hi - lo
    infid = _infidelities([system] * n, [pulse] * n, mods, steps, chunk=chunk)
    return lo, infid


def run_montecarlo(
    config: MonteCarloConfig,
    trap: TrapConfig,
    beams: BeamConfig,
    *,
    steps: int = 2048,
    jobs: int = 1,
) -> MonteCarloResult:
    """Average gate infidelity over thermal shots.

    The default 2048-step resolution leaves an integrator bias orders
    of magnitude below motion-induced infidelities; raise it when
    chasing sub-1e-6 effects. Failed shots (non-finite propagation)
    are excluded from the mean and counted.
    """
    blocks = []
    block_size = max(1, (config.shots + max(jobs, 1) - 1) // max(jobs, 1))
    for lo in range(0, config.shots, block_size):
        hi = min(lo + block_size, config.shots)
        blocks.append((config, trap, beams, lo, hi, steps))
    if jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pieces = dict(pool.map(_mc_block, blocks))
    else:
        pieces = dict(map(_mc_block, blocks))
    infid = np.concatenate([pieces[b[3]] for b in blocks])
    finite = infid[np.isfinite(infid)]
    failed = int(config.shots - finite.size)
    if finite.size == 0:
        raise RuntimeError("every Monte-Carlo shot failed to propagate")
    mean = float(np.mean(finite))
    std_error = float(np.std(finite, ddof=1) / np.sqrt(finite.size)) if finite.size > 1 else 0.0
    per_shot = None
    if config.keep_shots:
        _, _, omega_unit, _ = _prepare(config, beams)
        per_shot = tuple(
            (_shot_modifiers(config, trap, beams, i, omega_unit)[0], float(infid[i]))
            for i in range(config.shots)
        )
    metadata = {
        "temperature_uK": config.temperature_uK,
        "depth_uK": trap.depth_uK,
        "shots": config.shots,
        "master_seed": config.master_seed,
        "blockade_TB": config.blockade_TB,
        "gate_duration_phys": config.gate_duration_phys,
        "steps": steps,
        "scheme": beams.scheme.name,
        "wavelengths": [s.wavelength for s in beams.steps],
        "propagation_signs": [s.propagation_sign for s in beams.steps],
    }
    if config.intermediate_detuning_phys is not None:
        metadata["intermediate_detuning_phys"] = config.intermediate_detuning_phys
    if config.lifetimes is not None:
        metadata["lifetimes"] = list(config.lifetimes)
    return MonteCarloResult(
        mean_infidelity=mean,
        std_error=std_error,
        shots=config.shots,
        failed_shots=failed,
        metadata=metadata,
        per_shot=per_shot,
    )


def sweep_temperature(
    config: MonteCarloConfig,
    trap: TrapConfig,
    beams: BeamConfig,
    temperatures_uK: Sequence[float],
    *,
    steps: int = 2048,
    jobs: int = 1,
) -> list[MonteCarloResult]:
    """Temperature sweep with common random numbers: every point reuses
    the same per-shot unit draws, so curves differ only through the
    thermal sigmas."""
    return [
        run_montecarlo(
            replace(config, temperature_uK=float(t)), trap, beams,
            steps=steps, jobs=jobs,
        )
        for t in temperatures_uK
    ]


def sweep_depth(
    config: MonteCarloConfig,
    trap: TrapConfig,
    beams: BeamConfig,
    depths_uK: Sequence[float],
    *,
    steps: int = 2048,
    jobs: int = 1,
) -> list[MonteCarloResult]:
    """Trap-depth sweep with common random numbers."""
    return [
        run_montecarlo(
            config, replace(trap, depth_uK=float(d)), beams,
            steps=steps, jobs=jobs,
        )
        for d in depths_uK
    ]
