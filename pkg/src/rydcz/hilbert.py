"""Two-atom Hilbert space, drive Hamiltonians, and time propagation.

The model is a pair of identical atoms. Each atom is driven between the
qubit state |1> and a Rydberg state |r>, either directly (single-photon
scheme) or through an intermediate state |p> (two-photon scheme). The
doubly excited state |rr> carries a blockade shift B. Level |0> is a
spectator: no drive term ever couples it, so the two-atom propagator is
block diagonal over the subspaces selected by which atoms sit in |0>.
Propagation exploits that structure but always returns the full matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol, Sequence, Union

import numpy as np
import scipy.linalg

__all__ = [
    "LevelScheme",
    "GateSystem",
    "DriveSample",
    "DriveModifiers",
    "Propagator",
    "build_single_atom_hamiltonian",
    "build_two_atom_hamiltonian",
    "time_grid",
    "propagate",
    "propagate_many",
]


class LevelScheme(Enum):
    """Atomic level structure used for the gate drive."""

    SINGLE_PHOTON = "single_photon"
    TWO_PHOTON = "two_photon"

    @property
    def levels(self) -> tuple[str, ...]:
        if self is LevelScheme.SINGLE_PHOTON:
            return ("0", "1", "r")
        return ("0", "1", "p", "r")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def index(self, label: str) -> int:
        return self.levels.index(label)

    @property
    def driven_indices(self) -> tuple[int, ...]:
        """Single-atom levels touched by the drive. |0> is never coupled."""
        return tuple(range(1, self.dim))


@dataclass(frozen=True)
class GateSystem:
    """Static system constants shared by both atoms.

    Parameters
    ----------
    scheme : LevelScheme
        Level structure of the drive.
    blockade : float
        Rydberg blockade shift B on |rr>, in units of the reference Rabi
        frequency (dimensionless working units) or rad/s (physical).
    intermediate_detuning : float
        Detuning of the intermediate state |p> (two-photon scheme only).
    decay_rate_p, decay_rate_r : float
        Population decay rates of |p> and |r>. When nonzero they enter
        the Hamiltonian as -i*rate/2 diagonal terms, so norm loss of the
        propagator models radiative loss. Defaults are lossless.
    """

    scheme: LevelScheme
    blockade: float
    intermediate_detuning: float = 0.0
    decay_rate_p: float = 0.0
    decay_rate_r: float = 0.0

    def __post_init__(self) -> None:
        if self.decay_rate_p < 0 or self.decay_rate_r < 0:
            raise ValueError("decay rates must be nonnegative")
        if self.scheme is LevelScheme.SINGLE_PHOTON and self.decay_rate_p:
            raise ValueError("single-photon scheme has no |p> level to decay")

    @property
    def has_decay(self) -> bool:
        return self.decay_rate_p > 0 or self.decay_rate_r > 0


@dataclass
class DriveSample:
    """Instantaneous drive values. Fields may be scalars or equal-shape arrays.

    For the single-photon scheme ``rabi_1``/``rabi_2`` are the |1>-|r>
    Rabi amplitudes of the two atoms and the ``rabi_p_*`` fields are
    ignored. For the two-photon scheme ``rabi_p_*`` drive |1>-|p> (no
    phase) and ``rabi_*`` drive |p>-|r>, which carries the phase. The
    drive phase enters one coupling only; a constant offset of it is a
    gauge choice invisible to the computational subspace.
    """

    rabi_1: object
    rabi_2: object
    phase: object
    detuning: object
    rabi_p_1: object = 0.0
    rabi_p_2: object = 0.0
    detuning_shift_1: object = 0.0
    detuning_shift_2: object = 0.0


@dataclass(frozen=True)
class DriveModifiers:
    """Per-atom corrections applied on top of a pulse during propagation.

    ``rabi_scale`` multiplies each atom's Rabi amplitude (for the
    two-photon scheme, the second step |p>-|r>). ``rabi_scale_first``
    multiplies the first step |1>-|p>; when None it defaults to
    ``rabi_scale``. ``detuning_shift`` adds to the |r> detuning of each
    atom, which is where a Doppler shift of the (two-photon) resonance
    lands.
    """

    rabi_scale: tuple[float, float] = (1.0, 1.0)
    rabi_scale_first: Optional[tuple[float, float]] = None
    detuning_shift: tuple[float, float] = (0.0, 0.0)

    @property
    def first_step_scale(self) -> tuple[float, float]:
        if self.rabi_scale_first is None:
            return self.rabi_scale
        return self.rabi_scale_first


class PulseLike(Protocol):
    """What ``propagate`` needs from a pulse object."""

    duration_T: float

    def breakpoints(self) -> Sequence[float]: ...

    def sample(self, t: np.ndarray) -> DriveSample: ...


@dataclass
class Propagator:
    """Result of propagating one pulse.

    ``matrix`` is the full two-atom evolution operator in the product
    basis ordered atom-1 major (index = i*dim + j). It is unitary when
    the system is lossless and sub-unitary otherwise.
    """

    matrix: np.ndarray
    scheme: LevelScheme
    steps: int
    duration: float


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------


def build_single_atom_hamiltonian(
    system: GateSystem, sample: DriveSample, atom: int
) -> np.ndarray:
    """Dense single-atom Hamiltonian for ``atom`` (1 or 2) at one drive sample.

    The matrix is Hermitian by construction when the system is lossless;
    decay rates add -i*rate/2 on the decaying diagonals.
    """
    if atom not in (1, 2):
        raise ValueError("atom must be 1 or 2")
    rabi = sample.rabi_1 if atom == 1 else sample.rabi_2
    shift = sample.detuning_shift_1 if atom == 1 else sample.detuning_shift_2
    delta_r = sample.detuning + shift
    d = system.scheme.dim
    h = np.zeros((d, d), dtype=np.complex128)
    if system.scheme is LevelScheme.SINGLE_PHOTON:
        c = 0.5 * rabi * np.exp(1j * sample.phase)
        h[2, 1] = c
        h[1, 2] = np.conj(c)
        h[2, 2] = delta_r
    else:
        rabi_p = sample.rabi_p_1 if atom == 1 else sample.rabi_p_2
        cp = 0.5 * rabi_p
        cs = 0.5 * rabi * np.exp(1j * sample.phase)
        h[2, 1] = cp
        h[1, 2] = np.conj(cp)
        h[3, 2] = cs
        h[2, 3] = np.conj(cs)
        h[2, 2] = system.intermediate_detuning
        h[3, 3] = delta_r
    if system.has_decay:
        if system.scheme is LevelScheme.TWO_PHOTON:
            h[2, 2] -= 0.5j * system.decay_rate_p
        h[d - 1, d - 1] -= 0.5j * system.decay_rate_r
    return h


def build_two_atom_hamiltonian(system: GateSystem, sample: DriveSample) -> np.ndarray:
    """Full two-atom Hamiltonian H1 (x) I + I (x) H2 + B |rr><rr|."""
    d = system.scheme.dim
    h1 = build_single_atom_hamiltonian(system, sample, 1)
    h2 = build_single_atom_hamiltonian(system, sample, 2)
    eye = np.eye(d)
    h = np.kron(h1, eye) + np.kron(eye, h2)
    rr = (d - 1) * d + (d - 1)
    h[rr, rr] += system.blockade
    return h


# ---------------------------------------------------------------------------
# Time grid
# ---------------------------------------------------------------------------


def time_grid(
    duration: float, steps: int, breakpoints: Sequence[float] = ()
) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint sample times and step widths covering [0, duration].

    Every interior breakpoint lands exactly on a step boundary, so
    piecewise-defined drives (phase jumps, ramp edges) are never
    averaged across a discontinuity. Within each segment the grid is
    uniform and the Hamiltonian is sampled at step midpoints.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    interior = sorted(float(b) for b in breakpoints if 0.0 < b < duration)
    bounds = [0.0]
    for b in interior:
        if b - bounds[-1] > 1e-12 * duration:
            bounds.append(b)
    if duration - bounds[-1] > 1e-12 * duration:
        bounds.append(duration)
    else:
        bounds[-1] = duration
    mids = []
    dts = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = b - a
        n = max(1, math.ceil(steps * seg / duration))
        dt = seg / n
        mids.append(a + (np.arange(n) + 0.5) * dt)
        dts.append(np.full(n, dt))
    return np.concatenate(mids), np.concatenate(dts)


# ---------------------------------------------------------------------------
# Batched step exponentials
# ---------------------------------------------------------------------------


def _expm_steps_hermitian(h: np.ndarray, dts: np.ndarray) -> np.ndarray:
    """exp(-i h dt) for a (..., n, d, d) Hermitian stack via eigh."""
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * w * dts[..., None])
    return (v * phase[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _expm_steps_two_level(h: np.ndarray, dts: np.ndarray) -> np.ndarray:
    """Closed-form exp(-i h dt) for a Hermitian 2x2 stack."""
    a = h[..., 0, 0].real
    b = h[..., 1, 1].real
    c = h[..., 1, 0]
    mean = 0.5 * (a + b)
    g = 0.5 * (b - a)
    omega = np.sqrt(g * g + np.abs(c) ** 2)
    # sin(omega dt)/omega with a safe omega -> 0 limit
    s = dts * np.sinc(omega * dts / np.pi)
    cos = np.cos(omega * dts)
    phase = np.exp(-1j * mean * dts)
    u = np.empty(h.shape, dtype=np.complex128)
    u[..., 0, 0] = phase * (cos + 1j * g * s)
    u[..., 1, 1] = phase * (cos - 1j * g * s)
    u[..., 0, 1] = phase * (-1j * s) * np.conj(c)
    u[..., 1, 0] = phase * (-1j * s) * c
    return u


def _expm_steps_general(h: np.ndarray, dts: np.ndarray) -> np.ndarray:
    """exp(-i h dt) for a non-Hermitian stack (lossy effective Hamiltonian)."""
    return scipy.linalg.expm(-1j * h * dts[..., None, None])


def _ordered_product(u: np.ndarray) -> np.ndarray:
    """Time-ordered product u[:, n-1] @ ... @ u[:, 0] by pairwise reduction."""
    m = u
    while m.shape[1] > 1:
        n_even = m.shape[1] - (m.shape[1] % 2)
        pairs = np.matmul(m[:, 1:n_even:2], m[:, 0:n_even:2])
        if m.shape[1] % 2:
            m = np.concatenate([pairs, m[:, -1:]], axis=1)
        else:
            m = pairs
    return m[:, 0]


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


def _effective_fields(
    sample: DriveSample, modifiers: Optional[DriveModifiers], n: int
) -> dict:
    """Broadcast sampled drive values to per-step arrays with modifiers applied."""

    def arr(x):
        return np.broadcast_to(np.asarray(x, dtype=float), (n,))

    scale = modifiers.rabi_scale if modifiers is not None else (1.0, 1.0)
    scale_first = modifiers.first_step_scale if modifiers is not None else (1.0, 1.0)
    shift = modifiers.detuning_shift if modifiers is not None else (0.0, 0.0)
    return {
        "rabi_1": arr(sample.rabi_1) * scale[0],
        "rabi_2": arr(sample.rabi_2) * scale[1],
        "rabi_p_1": arr(sample.rabi_p_1) * scale_first[0],
        "rabi_p_2": arr(sample.rabi_p_2) * scale_first[1],
        "phase": arr(sample.phase),
        "delta_1": arr(sample.detuning) + arr(sample.detuning_shift_1) + shift[0],
        "delta_2": arr(sample.detuning) + arr(sample.detuning_shift_2) + shift[1],
    }


def _step_blocks(
    system: GateSystem, fields: dict, blockade: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step Hamiltonians for the three driven blocks.

    Returns (h1, h2, h11) where h1/h2 act on the driven levels of one
    atom (other atom spectating in |0>) and h11 on their product space
    including the blockade shift. Shapes are (batch, n, d, d);
    ``blockade`` has shape (batch,).
    """
    phase = np.exp(1j * fields["phase"])
    d1 = fields["delta_1"]
    d2 = fields["delta_2"]
    batch_shape = d1.shape
    if system.scheme is LevelScheme.SINGLE_PHOTON:
        nd = 2
        h1 = np.zeros(batch_shape + (nd, nd), dtype=np.complex128)
        h2 = np.zeros_like(h1)
        for h, rabi, dd in ((h1, fields["rabi_1"], d1), (h2, fields["rabi_2"], d2)):
            c = 0.5 * rabi * phase
            h[..., 1, 0] = c
            h[..., 0, 1] = np.conj(c)
            h[..., 1, 1] = dd
    else:
        nd = 3
        h1 = np.zeros(batch_shape + (nd, nd), dtype=np.complex128)
        h2 = np.zeros_like(h1)
        pairs = (
            (h1, fields["rabi_p_1"], fields["rabi_1"], d1),
            (h2, fields["rabi_p_2"], fields["rabi_2"], d2),
        )
        for h, rabi_p, rabi, dd in pairs:
            cs = 0.5 * rabi * phase
            h[..., 1, 0] = 0.5 * rabi_p
            h[..., 0, 1] = 0.5 * rabi_p
            h[..., 2, 1] = cs
            h[..., 1, 2] = np.conj(cs)
            h[..., 1, 1] = system.intermediate_detuning
            h[..., 2, 2] = dd
    if system.has_decay:
        if system.scheme is LevelScheme.TWO_PHOTON:
            h1[..., 1, 1] -= 0.5j * system.decay_rate_p
            h2[..., 1, 1] -= 0.5j * system.decay_rate_p
        h1[..., nd - 1, nd - 1] -= 0.5j * system.decay_rate_r
        h2[..., nd - 1, nd - 1] -= 0.5j * system.decay_rate_r
    eye = np.eye(nd)
    h11 = np.einsum("...ij,kl->...ikjl", h1, eye).reshape(batch_shape + (nd * nd, nd * nd))
    h11 = h11 + np.einsum("ij,...kl->...ikjl", eye, h2).reshape(
        batch_shape + (nd * nd, nd * nd)
    )
    h11[..., nd * nd - 1, nd * nd - 1] += blockade[..., None]
    return h1, h2, h11


def _block_index_sets(scheme: LevelScheme) -> tuple[list[int], list[int], list[int]]:
    d = scheme.dim
    driven = list(scheme.driven_indices)
    b01 = [j for j in driven]
    b10 = [i * d for i in driven]
    b11 = [i * d + j for i in driven for j in driven]
    return b01, b10, b11


def propagate_many(
    system: Union[GateSystem, Sequence[GateSystem]],
    pulses: Sequence[PulseLike],
    *,
    steps: int = 4096,
    modifiers: Optional[Sequence[Optional[DriveModifiers]]] = None,
) -> list[Propagator]:
    """Propagate a batch of pulses sharing one grid layout.

    All pulses must declare breakpoints at the same relative positions
    so their grids have equal step counts; durations may differ. This is
    the engine behind :func:`propagate` and the hot path of scans and
    optimization, which evaluate many parameter variants of one pulse
    family at once. ``system`` may be a single GateSystem or one per
    pulse; per-item systems may differ only in blockade strength (the
    case of a fixed blockade-duration product T*B with varying T).
    """
    if isinstance(system, GateSystem):
        systems = [system] * len(pulses)
    else:
        systems = list(system)
        if len(systems) != len(pulses):
            raise ValueError("systems must match pulses one to one")
        ref = systems[0]
        for s in systems[1:]:
            if (
                s.scheme is not ref.scheme
                or s.intermediate_detuning != ref.intermediate_detuning
                or s.decay_rate_p != ref.decay_rate_p
                or s.decay_rate_r != ref.decay_rate_r
            ):
                raise ValueError(
                    "batched systems may differ only in blockade strength"
                )
    system = systems[0]
    blockade = np.array([s.blockade for s in systems], dtype=float)
    if modifiers is None:
        modifiers = [None] * len(pulses)
    if len(modifiers) != len(pulses):
        raise ValueError("modifiers must match pulses one to one")
    grids = [time_grid(p.duration_T, steps, p.breakpoints()) for p in pulses]
    n = len(grids[0][0])
    if any(len(g[0]) != n for g in grids):
        raise ValueError("pulses produced grids of unequal size; propagate separately")
    mids = np.stack([g[0] for g in grids])
    dts = np.stack([g[1] for g in grids])
    field_rows = [
        _effective_fields(p.sample(mids[k]), modifiers[k], n)
        for k, p in enumerate(pulses)
    ]
    fields = {key: np.stack([row[key] for row in field_rows]) for key in field_rows[0]}
    h1, h2, h11 = _step_blocks(system, fields, blockade)
    if system.has_decay:
        u1 = _expm_steps_general(h1, dts)
        u2 = _expm_steps_general(h2, dts)
        u11 = _expm_steps_general(h11, dts)
    else:
        if system.scheme is LevelScheme.SINGLE_PHOTON:
            u1 = _expm_steps_two_level(h1, dts)
            u2 = _expm_steps_two_level(h2, dts)
        else:
            u1 = _expm_steps_hermitian(h1, dts)
            u2 = _expm_steps_hermitian(h2, dts)
        u11 = _expm_steps_hermitian(h11, dts)
    g1 = _ordered_product(u1)
    g2 = _ordered_product(u2)
    g11 = _ordered_product(u11)
    b01, b10, b11 = _block_index_sets(system.scheme)
    dim2 = system.scheme.dim ** 2
    out = []
    for k, p in enumerate(pulses):
        mat = np.zeros((dim2, dim2), dtype=np.complex128)
        mat[0, 0] = 1.0
        mat[np.ix_(b01, b01)] = g2[k]
        mat[np.ix_(b10, b10)] = g1[k]
        mat[np.ix_(b11, b11)] = g11[k]
        out.append(Propagator(matrix=mat, scheme=system.scheme, steps=n, duration=p.duration_T))
    return out


def propagate(
    system: GateSystem,
    pulse: PulseLike,
    *,
    steps: int = 4096,
    modifiers: Optional[DriveModifiers] = None,
) -> Propagator:
    """Propagate one pulse from t=0 to t=T.

    The evolution is a time-ordered product of step propagators
    exp(-i H(t_mid) dt) on the grid of :func:`time_grid`. The scheme is
    second order in the step width for smooth drives and exact for
    piecewise-constant ones. Without decay every step is unitary by
    construction, so the result is unitary to rounding error at any
    step count.
    """
    mods = None if modifiers is None else [modifiers]
    return propagate_many(system, [pulse], steps=steps, modifiers=mods)[0]
