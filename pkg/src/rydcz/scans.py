"""Robustness curves: infidelity versus amplitude errors and asymmetries.

Four scan axes: global Rabi scaling (1+eps) on both atoms, per-atom
asymmetry (atom 2 scaled by 1+alpha), a linear intra-pulse amplitude
ramp, and the intermediate-state detuning of a two-photon excitation
with decay. Also provides the embedding of a single-photon pulse into
the two-photon scheme with balanced step amplitudes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fidelity import computational_block, cz_fidelity_many
from .hilbert import DriveModifiers, DriveSample, GateSystem, LevelScheme, propagate_many
from .pulses import PulseProfile

__all__ = [
    "ScanResult",
    "scan_epsilon",
    "scan_alpha",
    "scan_ramp",
    "TwoPhotonPulse",
    "two_photon_embed",
    "embedded_system",
    "scan_intermediate_detuning",
    "LIFETIME_PRESETS",
    "DEFAULT_BLOCKADE_TB",
    "DEFAULT_DETUNING_PRODUCT",
]

DEFAULT_BLOCKADE_TB = 1.0e4
# Default intermediate-state detuning as the product T*Delta_P/(2*pi).
DEFAULT_DETUNING_PRODUCT = 5000.0

# Intermediate / Rydberg state lifetimes (seconds) for the excitation
# paths compared in the lifetime scan.
LIFETIME_PRESETS = {
    "5P3/2": 26.0e-9,
    "6P3/2": 118.0e-9,
    "7P_Cs": 155.0e-9,
    "80S": 209.0e-6,
}


@dataclass
class ScanResult:
    """One robustness curve; failed points carry NaN infidelity."""

    axis_name: str
    axis_values: tuple[float, ...]
    infidelities: tuple[float, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.axis_values = tuple(float(v) for v in self.axis_values)
        self.infidelities = tuple(float(f) for f in self.infidelities)
        if len(self.axis_values) != len(self.infidelities):
            raise ValueError("axis_values and infidelities must align")
        for f in self.infidelities:
            if not np.isnan(f) and not -1.0e-9 <= f <= 1.0 + 1.0e-9:
                raise ValueError(f"infidelity {f} outside [0, 1]")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["axis", "value", "infidelity"])
            for v, f in zip(self.axis_values, self.infidelities):
                writer.writerow([self.axis_name, repr(v), repr(f)])

    @classmethod
    def from_csv(cls, path) -> "ScanResult":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["axis", "value", "infidelity"]:
                raise ValueError(f"unexpected CSV header {header}")
            rows = list(reader)
        if not rows:
            raise ValueError("empty scan file")
        names = {r[0] for r in rows}
        if len(names) != 1:
            raise ValueError(f"mixed axis names {sorted(names)}")
        return cls(
            axis_name=rows[0][0],
            axis_values=tuple(float(r[1]) for r in rows),
            infidelities=tuple(float(r[2]) for r in rows),
        )

    def write_metadata(self, path) -> None:
        payload = {
            "axis": self.axis_name,
            "points": len(self.axis_values),
            "metadata": self.metadata,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


_CHUNK = 64


def _infidelities(
    systems: Sequence[GateSystem],
    pulses: Sequence,
    modifiers: Sequence[Optional[DriveModifiers]],
    steps: int,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Batched scoring; a point that fails to propagate becomes NaN."""
    out = np.full(len(pulses), np.nan)
    for lo in range(0, len(pulses), chunk):
        hi = min(lo + chunk, len(pulses))
        sl = slice(lo, hi)
        try:
            props = propagate_many(
                list(systems[sl]), list(pulses[sl]), steps=steps,
                modifiers=list(modifiers[sl]),
            )
            blocks = np.stack([computational_block(p) for p in props])
            reports = cz_fidelity_many(blocks)
            out[sl] = [1.0 - r.fidelity for r in reports]
        except (ValueError, FloatingPointError):
            for i in range(lo, hi):
                try:
                    props = propagate_many(
                        [systems[i]], [pulses[i]], steps=steps,
                        modifiers=[modifiers[i]],
                    )
                    rep = cz_fidelity_many(
                        np.stack([computational_block(props[0])])
                    )[0]
                    out[i] = 1.0 - rep.fidelity
                except (ValueError, FloatingPointError):
                    out[i] = np.nan
    return out


def _base_metadata(pulse, system: GateSystem, steps: int) -> dict:
    meta = {
        "scheme": system.scheme.name,
        "blockade": system.blockade,
        "steps": steps,
        "duration_T": pulse.duration_T,
    }
    if system.scheme is LevelScheme.TWO_PHOTON:
        meta["intermediate_detuning"] = system.intermediate_detuning
    if system.has_decay:
        meta["decay_rate_p"] = system.decay_rate_p
        meta["decay_rate_r"] = system.decay_rate_r
    return meta


def scan_epsilon(pulse, epsilon_values, system: GateSystem, *, steps: int = 4096) -> ScanResult:
    """Infidelity versus global amplitude error: both atoms at (1+eps).

    For a two-photon pulse the scaling applies to both excitation steps
    of both atoms, keeping the per-atom step amplitudes balanced.
    """
    values = [float(e) for e in epsilon_values]
    mods = [DriveModifiers(rabi_scale=(1.0 + e, 1.0 + e)) for e in values]
    infid = _infidelities([system] * len(values), [pulse] * len(values), mods, steps)
    return ScanResult("epsilon", tuple(values), tuple(infid),
                      metadata=_base_metadata(pulse, system, steps))


def scan_alpha(pulse, alpha_values, system: GateSystem, *, steps: int = 4096) -> ScanResult:
    """Infidelity versus drive asymmetry: atom 1 nominal, atom 2 at (1+alpha)."""
    values = [float(a) for a in alpha_values]
    mods = [DriveModifiers(rabi_scale=(1.0, 1.0 + a)) for a in values]
    infid = _infidelities([system] * len(values), [pulse] * len(values), mods, steps)
    return ScanResult("alpha", tuple(values), tuple(infid),
                      metadata=_base_metadata(pulse, system, steps))


def scan_ramp(pulse: PulseProfile, ramp_values, system: GateSystem, *, steps: int = 4096) -> ScanResult:
    """Infidelity versus linear amplitude ramp 1 + d*(t - T/2)/T on both atoms."""
    values = [float(d) for d in ramp_values]
    pulses = [pulse.with_ramp(d) for d in values]
    infid = _infidelities([system] * len(values), pulses, [None] * len(values), steps)
    return ScanResult("ramp", tuple(values), tuple(infid),
                      metadata=_base_metadata(pulse, system, steps))


@dataclass(frozen=True)
class TwoPhotonPulse:
    """Two-photon drive realizing a single-photon pulse after adiabatic
    elimination of the intermediate state.

    Both steps carry amplitude sqrt(2 * Delta_P * Omega(t)), so the
    effective two-level Rabi frequency Omega_P*Omega_S/(2*Delta_P)
    equals Omega(t) and the single-step light shifts cancel. The phase
    profile rides on the second step only.
    """

    base: PulseProfile
    intermediate_detuning: float

    def __post_init__(self) -> None:
        if self.intermediate_detuning <= 0:
            raise ValueError("intermediate detuning must be positive")

    @property
    def duration_T(self) -> float:
        return self.base.duration_T

    def breakpoints(self) -> tuple[float, ...]:
        return self.base.breakpoints()

    def sample(self, t) -> DriveSample:
        s = self.base.sample(t)
        omega = np.asarray(s.rabi_1, dtype=float)
        if np.any(omega < 0):
            raise ValueError("two-photon embedding requires a nonnegative envelope")
        step = np.sqrt(2.0 * self.intermediate_detuning * omega)
        return DriveSample(
            rabi_1=step,
            rabi_2=step,
            phase=s.phase,
            detuning=s.detuning,
            rabi_p_1=step,
            rabi_p_2=step,
        )


def two_photon_embed(pulse: PulseProfile, intermediate_detuning: float) -> TwoPhotonPulse:
    """Embed a single-photon pulse in the two-photon scheme at the given
    intermediate-state detuning (same time units as the pulse)."""
    return TwoPhotonPulse(base=pulse, intermediate_detuning=intermediate_detuning)


def embedded_system(
    pulse: TwoPhotonPulse,
    blockade_TB: float = DEFAULT_BLOCKADE_TB,
    *,
    decay_rate_p: float = 0.0,
    decay_rate_r: float = 0.0,
) -> GateSystem:
    """Two-photon GateSystem matching an embedded pulse's detuning,
    with blockade fixed through the product TB."""
    return GateSystem(
        LevelScheme.TWO_PHOTON,
        blockade=blockade_TB / pulse.duration_T,
        intermediate_detuning=pulse.intermediate_detuning,
        decay_rate_p=decay_rate_p,
        decay_rate_r=decay_rate_r,
    )


def scan_intermediate_detuning(
    pulse: PulseProfile,
    delta_p_values,
    lifetimes: dict,
    gate_duration_phys: float,
    *,
    blockade_TB: float = DEFAULT_BLOCKADE_TB,
    steps: int = 8192,
) -> ScanResult:
    """Infidelity versus intermediate-state detuning with decay on.

    ``delta_p_values`` are physical angular frequencies (rad/s);
    ``lifetimes`` carries ``tau_p`` and ``tau_r`` in seconds;
    ``gate_duration_phys`` is the physical gate duration in seconds.
    The dimensionless pulse is executed at that duration, which fixes
    the frequency unit omega_unit = T / gate_duration_phys; detuning
    and decay rates are expressed in that unit before propagation.
    """
    tau_p = float(lifetimes["tau_p"])
    tau_r = float(lifetimes["tau_r"])
    if tau_p <= 0 or tau_r <= 0:
        raise ValueError("lifetimes must be positive")
    omega_unit = pulse.duration_T / float(gate_duration_phys)
    values = [float(d) for d in delta_p_values]
    systems = []
    pulses = []
    for dp in values:
        if dp <= 0:
            raise ValueError("intermediate detuning must be positive")
        embedded = two_photon_embed(pulse, dp / omega_unit)
        pulses.append(embedded)
        systems.append(
            embedded_system(
                embedded,
                blockade_TB,
                decay_rate_p=(1.0 / tau_p) / omega_unit,
                decay_rate_r=(1.0 / tau_r) / omega_unit,
            )
        )
    infid = np.empty(len(values))
    # Systems differ beyond the blockade, so points propagate one by one.
    for i in range(len(values)):
        infid[i] = _infidelities([systems[i]], [pulses[i]], [None], steps)[0]
    return ScanResult(
        "delta_p",
        tuple(values),
        tuple(infid),
        metadata={
            "blockade_TB": blockade_TB,
            "tau_p": tau_p,
            "tau_r": tau_r,
            "gate_duration_phys": gate_duration_phys,
            "steps": steps,
            "duration_T": pulse.duration_T,
        },
    )
