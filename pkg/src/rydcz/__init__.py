"""Simulation and robust-pulse optimization of Rydberg-blockade CZ gates.

Subpackages cover the two-atom Hilbert space and propagation
(:mod:`rydcz.hilbert`), pulse parameterizations and presets
(:mod:`rydcz.pulses`), the CZ fidelity metric (:mod:`rydcz.fidelity`),
robustness scans and the two-photon embedding (:mod:`rydcz.scans`),
penalized multi-stage pulse optimization (:mod:`rydcz.optimizer`),
thermal-motion Monte Carlo error budgets (:mod:`rydcz.montecarlo`),
and a command line interface (:mod:`rydcz.cli`).
"""

from .hilbert import (
    DriveModifiers,
    DriveSample,
    GateSystem,
    LevelScheme,
    Propagator,
    build_single_atom_hamiltonian,
    build_two_atom_hamiltonian,
    propagate,
    propagate_many,
)
from .fidelity import FidelityReport, computational_block, cz_fidelity
from .pulses import (
    ConstantAmplitude,
    Interpretation,
    PhaseAnsatz,
    PolynomialAmplitude,
    PulseProfile,
    RampedAmplitude,
    SmoothstepAmplitude,
    StepPhase,
    preset,
    preset_metadata,
    preset_names,
    pulse_from_payload,
    smoothstep,
)

__version__ = "0.1.0"

__all__ = [
    "DriveModifiers",
    "DriveSample",
    "GateSystem",
    "LevelScheme",
    "Propagator",
    "build_single_atom_hamiltonian",
    "build_two_atom_hamiltonian",
    "propagate",
    "propagate_many",
    "FidelityReport",
    "computational_block",
    "cz_fidelity",
    "ConstantAmplitude",
    "Interpretation",
    "PhaseAnsatz",
    "PolynomialAmplitude",
    "PulseProfile",
    "RampedAmplitude",
    "SmoothstepAmplitude",
    "StepPhase",
    "preset",
    "preset_metadata",
    "preset_names",
    "pulse_from_payload",
    "smoothstep",
    "__version__",
]
