"""Command-line interface: simulate, scan, optimize, montecarlo, presets.

Configuration may come from a JSON file (``--config``, with a
``schema_version`` field) and/or flags; flags override file values and
every default is materialized into the run manifest, so re-running
with a manifest's config reproduces the outputs bit for bit. All file
writes are atomic (write to a temporary file, then rename). Exit
codes: 0 success, 1 usage or configuration error, 2 numerical failure.
Stochastic commands (optimize, montecarlo) require a seed from either
the config file or ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .fidelity import cz_fidelity
from .hilbert import GateSystem, LevelScheme, propagate
from .montecarlo import (
    MonteCarloConfig,
    TrapConfig,
    single_photon_beams,
    sweep_depth,
    sweep_temperature,
    two_photon_beams,
)
from .optimizer import (
    PipelineConfig,
    StageConfig,
    default_stages,
    multistage_pipeline,
    parameter_payload,
)
from .pulses import preset, preset_metadata, preset_names, pulse_from_payload
from .scans import (
    DEFAULT_BLOCKADE_TB,
    DEFAULT_DETUNING_PRODUCT,
    LIFETIME_PRESETS,
    embedded_system,
    scan_alpha,
    scan_epsilon,
    scan_intermediate_detuning,
    scan_ramp,
    two_photon_embed,
)

__all__ = ["main", "UsageError"]

OUTPUT_DIR_ENV = "RYDCZ_OUTPUT_DIR"


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(message)


def _normalize_preset(name: str) -> str:
    key = name.replace("-", "").replace("_", "").lower()
    for known in preset_names():
        if known.lower() == key:
            return known
    raise UsageError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def _output_dir(args) -> Path:
    if getattr(args, "output_dir", None):
        path = Path(args.output_dir)
    elif os.environ.get(OUTPUT_DIR_ENV):
        path = Path(os.environ[OUTPUT_DIR_ENV])
    else:
        path = Path.cwd()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: dict) -> None:
    _write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue())


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != 1:
        raise UsageError(f"config {path} must carry schema_version 1")
    # A run manifest doubles as a config file for reproducing the run.
    if "command" in payload and "config" in payload:
        return dict(payload["config"])
    return {k: v for k, v in payload.items() if k != "schema_version"}


def _resolve(defaults: dict, file_cfg: dict, flags: dict) -> dict:
    """Defaults, then config file, then explicitly given flags."""
    resolved = dict(defaults)
    for key, value in file_cfg.items():
        if key not in defaults:
            raise UsageError(f"unknown config key {key!r}")
        resolved[key] = value
    for key, value in flags.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _parse_values(text: Optional[str], what: str) -> list[float]:
    if not text:
        raise UsageError(f"provide --values for {what}")
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad --values entry: {exc}") from None


def _manifest(
    directory: Path,
    base: str,
    command: str,
    config: dict,
    master_seed: Optional[int],
    outputs: list[Path],
    t_start: float,
) -> Path:
    path = directory / f"{base}.manifest.json"
    payload = {
        "schema_version": 1,
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "master_seed": master_seed,
        "outputs": [p.name for p in outputs],
        "wall_clock_s": time.time() - t_start,
    }
    _write_json(path, payload)
    return path


def _load_pulse(preset_name: Optional[str], pulse_file: Optional[str]):
    if (preset_name is None) == (pulse_file is None):
        raise UsageError("provide exactly one of --preset or --pulse-file")
    if preset_name is not None:
        name = _normalize_preset(preset_name)
        return name, preset(name)
    with open(pulse_file, encoding="utf-8") as fh:
        payload = json.load(fh)
    pulse = pulse_from_payload(payload.get("parameters", payload))
    return Path(pulse_file).stem, pulse


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    t_start = time.time()
    file_cfg = _load_config(args.config)
    defaults = {
        "preset": None,
        "pulse_file": None,
        "blockade_TB": DEFAULT_BLOCKADE_TB,
        "steps": 4096,
        "two_photon": False,
        "deltap_product": DEFAULT_DETUNING_PRODUCT,
    }
    cfg = _resolve(defaults, file_cfg, {
        "preset": args.preset,
        "pulse_file": args.pulse_file,
        "blockade_TB": args.tb,
        "steps": args.steps,
        "two_photon": True if args.two_photon else None,
        "deltap_product": args.deltap_product,
    })
    label, pulse = _load_pulse(cfg["preset"], cfg["pulse_file"])
    cfg["preset"] = label if cfg["pulse_file"] is None else None
    if cfg["two_photon"]:
        embedded = two_photon_embed(
            pulse, 2.0 * np.pi * cfg["deltap_product"] / pulse.duration_T
        )
        system = embedded_system(embedded, cfg["blockade_TB"])
        drive = embedded
    else:
        system = GateSystem(
            LevelScheme.SINGLE_PHOTON, blockade=cfg["blockade_TB"] / pulse.duration_T
        )
        drive = pulse
    report = cz_fidelity(propagate(system, drive, steps=int(cfg["steps"])))
    if not np.isfinite(report.fidelity):
        raise FloatingPointError("propagation produced a non-finite fidelity")
    print(f"pulse        = {label}")
    print(f"scheme       = {system.scheme.name}")
    print(f"blockade     = {system.blockade:.6g}  (TB = {cfg['blockade_TB']:.6g})")
    print(f"fidelity     = {report.fidelity:.12f}")
    print(f"infidelity   = {report.infidelity:.6e}")
    print(f"leakage      = {report.leakage:.6e}")
    print(f"theta_1      = {report.theta_1:.9f} rad")
    print(f"theta_2      = {report.theta_2:.9f} rad")
    directory = _output_dir(args)
    base = args.out or f"simulate_{label}"
    report_path = directory / f"{base}.json"
    _write_json(report_path, {"pulse": label, **report.as_dict()})
    _manifest(directory, base, "simulate", cfg, None, [report_path], t_start)
    return 0


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------


def _cmd_scan(args) -> int:
    t_start = time.time()
    file_cfg = _load_config(args.config)
    defaults = {
        "axis": None,
        "presets": None,
        "values": None,
        "blockade_TB": DEFAULT_BLOCKADE_TB,
        "steps": None,
        "two_photon": False,
        "deltap_product": DEFAULT_DETUNING_PRODUCT,
        "gate_ns": 100.0,
        "path": None,
        "tau_p_ns": None,
        "tau_r_us": 209.0,
    }
    cfg = _resolve(defaults, file_cfg, {
        "axis": args.axis,
        "presets": args.preset or None,
        "values": args.values,
        "blockade_TB": args.tb,
        "steps": args.steps,
        "two_photon": True if args.two_photon else None,
        "deltap_product": args.deltap_product,
        "gate_ns": args.gate_ns,
        "path": args.path,
        "tau_p_ns": args.tau_p_ns,
        "tau_r_us": args.tau_r_us,
    })
    if cfg["axis"] is None:
        raise UsageError("provide --axis (epsilon, alpha, ramp, or deltap)")
    if not cfg["presets"]:
        raise UsageError("provide at least one --preset")
    values = (
        _parse_values(cfg["values"], f"axis {cfg['axis']}")
        if isinstance(cfg["values"], str)
        else list(map(float, cfg["values"] or []))
    )
    if not values:
        raise UsageError(f"provide --values for axis {cfg['axis']}")
    names = [_normalize_preset(p) for p in cfg["presets"]]
    cfg["presets"] = names
    cfg["values"] = values
    axis = cfg["axis"]
    if cfg["two_photon"] and axis not in ("epsilon", "alpha"):
        raise UsageError("--two-photon applies to the epsilon and alpha axes")
    if axis == "deltap":
        if cfg["path"] is not None:
            key = {"5P": "5P3/2", "6P": "6P3/2"}.get(cfg["path"], cfg["path"])
            if key not in LIFETIME_PRESETS:
                raise UsageError(
                    f"unknown path {cfg['path']!r}; known: 5P, 6P, "
                    + ", ".join(LIFETIME_PRESETS)
                )
            cfg["tau_p_ns"] = LIFETIME_PRESETS[key] * 1.0e9
        if cfg["tau_p_ns"] is None:
            raise UsageError("deltap axis needs --path or --tau-p-ns")
    steps = int(cfg["steps"]) if cfg["steps"] is not None else (8192 if axis == "deltap" else 4096)
    cfg["steps"] = steps

    directory = _output_dir(args)
    base = args.out or f"scan_{axis}"
    outputs: list[Path] = []
    combined: list[tuple] = []
    for name in names:
        pulse = preset(name)
        if axis == "deltap":
            result = scan_intermediate_detuning(
                pulse,
                [2.0 * np.pi * 1.0e9 * v for v in values],
                {"tau_p": cfg["tau_p_ns"] * 1.0e-9, "tau_r": cfg["tau_r_us"] * 1.0e-6},
                gate_duration_phys=cfg["gate_ns"] * 1.0e-9,
                blockade_TB=cfg["blockade_TB"],
                steps=steps,
            )
            # Record the axis in the units given on the command line (GHz).
            result.axis_values = tuple(values)
            result.axis_name = "delta_p_GHz"
        else:
            if cfg["two_photon"]:
                drive = two_photon_embed(
                    pulse, 2.0 * np.pi * cfg["deltap_product"] / pulse.duration_T
                )
                system = embedded_system(drive, cfg["blockade_TB"])
            else:
                drive = pulse
                system = GateSystem(
                    LevelScheme.SINGLE_PHOTON,
                    blockade=cfg["blockade_TB"] / pulse.duration_T,
                )
            scanner = {"epsilon": scan_epsilon, "alpha": scan_alpha, "ramp": scan_ramp}[axis]
            result = scanner(drive, values, system, steps=steps)
        result.metadata["preset"] = name
        csv_path = directory / f"{base}_{name}.csv"
        meta_path = directory / f"{base}_{name}.meta.json"
        result.write_csv(csv_path)
        result.write_metadata(meta_path)
        outputs += [csv_path, meta_path]
        combined += [
            (axis, name, repr(v), repr(f))
            for v, f in zip(result.axis_values, result.infidelities)
        ]
        print(f"{name}: " + "  ".join(f"{f:.3e}" for f in result.infidelities))
    combined_path = directory / f"{base}_combined.csv"
    _write_csv_rows(combined_path, ["axis", "preset", "value", "infidelity"], combined)
    outputs.append(combined_path)
    _manifest(directory, base, "scan", cfg, None, outputs, t_start)
    return 0


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def _stage_from_dict(entry: dict) -> StageConfig:
    try:
        return StageConfig(
            epsilon_grid=tuple(float(e) for e in entry["epsilon_grid"]),
            weight_variation=float(entry["weight_variation"]),
            weight_slope=float(entry["weight_slope"]),
            learning_rate=float(entry["learning_rate"]),
            iterations=int(entry["iterations"]),
            survivors=int(entry["survivors"]),
        )
    except KeyError as exc:
        raise UsageError(f"stage entry missing key {exc}") from None


def _stage_to_dict(stage: StageConfig) -> dict:
    return {
        "epsilon_grid": list(stage.epsilon_grid),
        "weight_variation": stage.weight_variation,
        "weight_slope": stage.weight_slope,
        "learning_rate": stage.learning_rate,
        "iterations": stage.iterations,
        "survivors": stage.survivors,
    }


def _cmd_optimize(args) -> int:
    t_start = time.time()
    file_cfg = _load_config(args.config)
    defaults = {
        "master_seed": None,
        "pool_size": 32,
        "n_modes": 4,
        "blockade_TB": DEFAULT_BLOCKADE_TB,
        "steps": 512,
        "final_steps": 4096,
        "amplitude_kind": "constant",
        "stages": [_stage_to_dict(s) for s in default_stages()],
        "freeze": [],
        "overrides": {},
        "top": 2,
    }
    cfg = _resolve(defaults, file_cfg, {
        "master_seed": args.seed,
        "pool_size": args.pool,
        "steps": args.steps,
        "final_steps": args.final_steps,
        "amplitude_kind": args.amplitude,
        "top": args.top,
    })
    if cfg["master_seed"] is None:
        raise UsageError("a seed is required: pass --seed or set master_seed in the config")
    stages = tuple(_stage_from_dict(dict(s)) for s in cfg["stages"])
    if args.iterations is not None:
        stages = tuple(replace(s, iterations=int(args.iterations)) for s in stages)
    # Small pools cap the survivor counts of the stock schedule.
    stages = tuple(
        replace(s, survivors=min(s.survivors, int(cfg["pool_size"]))) for s in stages
    )
    cfg["stages"] = [_stage_to_dict(s) for s in stages]
    pipeline = PipelineConfig(
        master_seed=int(cfg["master_seed"]),
        pool_size=int(cfg["pool_size"]),
        n_modes=int(cfg["n_modes"]),
        blockade_TB=float(cfg["blockade_TB"]),
        steps=int(cfg["steps"]),
        final_steps=int(cfg["final_steps"]),
        amplitude_kind=cfg["amplitude_kind"],
        stages=stages,
        freeze=tuple(cfg["freeze"]),
        overrides=tuple((str(k), float(v)) for k, v in dict(cfg["overrides"]).items()),
    )
    directory = _output_dir(args)
    base = args.out or "optimize"
    resume_state = None
    if args.resume:
        with open(args.resume, encoding="utf-8") as fh:
            resume_state = json.load(fh)
    checkpoint_path = directory / f"{base}_checkpoint.json"

    def save_checkpoint(state: dict) -> None:
        _write_json(checkpoint_path, {"schema_version": 1, **state})
        print(f"stage {state['completed_stages']}/{state['n_stages']} done; "
              f"pool {len(state['alive'])}")

    result = multistage_pipeline(
        pipeline, jobs=args.jobs, on_stage=save_checkpoint, resume=resume_state
    )
    outputs: list[Path] = [checkpoint_path] if checkpoint_path.exists() else []
    for rank, member in enumerate(result.ranked[: int(cfg["top"])], start=1):
        path = directory / f"{base}_rank{rank}.json"
        _write_json(path, {
            "schema_version": 1,
            "name": f"optimized-seed{pipeline.master_seed}-rank{rank}",
            "description": "amplitude-robust pulse from the staged pipeline",
            "provenance": {
                "generator": "rydcz optimize",
                "master_seed": pipeline.master_seed,
                "member": member.index,
                "final_report": member.final_report.as_dict(),
            },
            "parameters": parameter_payload(member.params),
        })
        outputs.append(path)
        print(
            f"rank {rank}: member {member.index} "
            f"composite {member.final_report.composite:.8f} "
            f"mean infidelity {1.0 - member.final_report.mean_fidelity:.3e}"
        )
    summary_path = directory / f"{base}_summary.json"
    _write_json(summary_path, {"schema_version": 1, **result.as_dict()})
    outputs.append(summary_path)
    _manifest(directory, base, "optimize", cfg, pipeline.master_seed, outputs, t_start)
    return 0


# ---------------------------------------------------------------------------
# montecarlo
# ---------------------------------------------------------------------------

_BEAM_CHOICES = ("single", "420_1013", "780_480")


def _beams_from_name(name: str, wavelength_nm: float, waist_um: float):
    waist = waist_um * 1.0e-6
    if name == "single":
        return single_photon_beams(wavelength_nm * 1.0e-9, waist)
    if name == "420_1013":
        return two_photon_beams(420.0e-9, 1013.0e-9, waist)
    if name == "780_480":
        return two_photon_beams(780.0e-9, 480.0e-9, waist)
    raise UsageError(f"unknown beams {name!r}; choose from {', '.join(_BEAM_CHOICES)}")


def _cmd_montecarlo(args) -> int:
    t_start = time.time()
    file_cfg = _load_config(args.config)
    defaults = {
        "master_seed": None,
        "presets": None,
        "sweep": "temperature",
        "values": None,
        "temperature_uK": 5.0,
        "shots": 5000,
        "beams": "single",
        "wavelength_nm": 297.0,
        "waist_um": 1.0,
        "gate_ns": None,
        "deltap_ghz": 5.0,
        "blockade_TB": DEFAULT_BLOCKADE_TB,
        "steps": 2048,
        "trap_depth_uK": 100.0,
        "trap_wavelength_nm": 850.0,
        "trap_waist_um": 1.0,
    }
    cfg = _resolve(defaults, file_cfg, {
        "master_seed": args.seed,
        "presets": args.preset or None,
        "sweep": args.sweep,
        "values": args.values,
        "temperature_uK": args.temperature,
        "shots": args.shots,
        "beams": args.beams,
        "wavelength_nm": args.wavelength_nm,
        "gate_ns": args.gate_ns,
        "deltap_ghz": args.deltap_ghz,
        "blockade_TB": args.tb,
        "steps": args.steps,
        "trap_depth_uK": args.depth,
    })
    if cfg["master_seed"] is None:
        raise UsageError("a seed is required: pass --seed or set master_seed in the config")
    if not cfg["presets"]:
        raise UsageError("provide at least one --preset")
    if cfg["sweep"] not in ("temperature", "depth"):
        raise UsageError("--sweep must be temperature or depth")
    values = (
        _parse_values(cfg["values"], f"{cfg['sweep']} sweep")
        if isinstance(cfg["values"], str)
        else list(map(float, cfg["values"] or []))
    )
    if not values:
        raise UsageError(f"provide --values for the {cfg['sweep']} sweep")
    names = [_normalize_preset(p) for p in cfg["presets"]]
    cfg["presets"] = names
    cfg["values"] = values
    if cfg["gate_ns"] is None:
        cfg["gate_ns"] = 100.0 if cfg["beams"] == "single" else 1000.0
    beams = _beams_from_name(cfg["beams"], cfg["wavelength_nm"], cfg["waist_um"])
    trap = TrapConfig(
        wavelength=cfg["trap_wavelength_nm"] * 1.0e-9,
        waist_w0=cfg["trap_waist_um"] * 1.0e-6,
        depth_uK=cfg["trap_depth_uK"],
    )
    two_photon = cfg["beams"] != "single"
    directory = _output_dir(args)
    base = args.out or f"mc_{cfg['sweep']}"
    outputs: list[Path] = []
    for name in names:
        mc_cfg = MonteCarloConfig(
            pulse=preset(name),
            gate_duration_phys=cfg["gate_ns"] * 1.0e-9,
            temperature_uK=float(cfg["temperature_uK"]),
            shots=int(cfg["shots"]),
            master_seed=int(cfg["master_seed"]),
            blockade_TB=float(cfg["blockade_TB"]),
            intermediate_detuning_phys=(
                2.0 * np.pi * 1.0e9 * cfg["deltap_ghz"] if two_photon else None
            ),
        )
        runner = sweep_temperature if cfg["sweep"] == "temperature" else sweep_depth
        results = runner(mc_cfg, trap, beams, values, steps=int(cfg["steps"]), jobs=args.jobs)
        rows = [
            (repr(v), repr(r.mean_infidelity), repr(r.std_error), r.shots, r.failed_shots)
            for v, r in zip(values, results)
        ]
        csv_path = directory / f"{base}_{name}.csv"
        _write_csv_rows(
            csv_path,
            ["temperature_or_depth", "mean_infidelity", "std_error", "shots", "failed_shots"],
            rows,
        )
        meta_path = directory / f"{base}_{name}.meta.json"
        _write_json(meta_path, {"preset": name, "sweep": cfg["sweep"], **results[0].metadata})
        outputs += [csv_path, meta_path]
        print(f"{name}: " + "  ".join(f"{r.mean_infidelity:.3e}" for r in results))
    _manifest(directory, base, "montecarlo", cfg, int(cfg["master_seed"]), outputs, t_start)
    return 0


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _cmd_presets(args) -> int:
    if args.action != "list":
        raise UsageError("supported action: list")
    for name in preset_names():
        pulse = preset(name)
        meta = preset_metadata(name)
        amp = type(pulse.amplitude).__name__
        print(
            f"{name:14s} T={pulse.duration_T:<10.6g} detuning={pulse.detuning:<12.8g} "
            f"amplitude={amp}"
        )
        if meta.get("description"):
            print(f"{'':14s} {meta['description']}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="rydcz", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rydcz {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (schema_version 1)")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or CWD)")
        p.add_argument("--out", help="base name for output files")

    p_sim = sub.add_parser("simulate", help="propagate one pulse and report CZ fidelity")
    common(p_sim)
    p_sim.add_argument("--preset")
    p_sim.add_argument("--pulse-file", help="pulse parameter JSON (preset format)")
    p_sim.add_argument("--tb", type=float, help="blockade-duration product TB")
    p_sim.add_argument("--steps", type=int)
    p_sim.add_argument("--two-photon", action="store_true", default=None)
    p_sim.add_argument("--deltap-product", type=float,
                       help="intermediate detuning as T*Delta_P/(2*pi)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_scan = sub.add_parser("scan", help="robustness curves along one axis")
    common(p_scan)
    p_scan.add_argument("--axis", choices=("epsilon", "alpha", "ramp", "deltap"))
    p_scan.add_argument("--preset", action="append", help="repeatable")
    p_scan.add_argument("--values", help="comma-separated axis values (deltap: GHz)")
    p_scan.add_argument("--tb", type=float)
    p_scan.add_argument("--steps", type=int)
    p_scan.add_argument("--two-photon", action="store_true", default=None)
    p_scan.add_argument("--deltap-product", type=float)
    p_scan.add_argument("--gate-ns", type=float, help="physical gate duration (deltap axis)")
    p_scan.add_argument("--path", help="intermediate-state choice for deltap axis: 5P or 6P")
    p_scan.add_argument("--tau-p-ns", type=float, help="intermediate-state lifetime in ns")
    p_scan.add_argument("--tau-r-us", type=float, help="Rydberg-state lifetime in microseconds")
    p_scan.set_defaults(func=_cmd_scan)

    p_opt = sub.add_parser("optimize", help="staged amplitude-robust pulse search")
    common(p_opt)
    p_opt.add_argument("--seed", type=int)
    p_opt.add_argument("--pool", type=int)
    p_opt.add_argument("--steps", type=int)
    p_opt.add_argument("--final-steps", type=int)
    p_opt.add_argument("--iterations", type=int,
                       help="override the iteration budget of every stage")
    p_opt.add_argument("--amplitude", choices=("constant", "smoothstep"))
    p_opt.add_argument("--top", type=int, help="how many ranked results to write")
    p_opt.add_argument("--resume", help="stage checkpoint JSON to continue from")
    p_opt.add_argument("--jobs", type=int, default=1)
    p_opt.set_defaults(func=_cmd_optimize)

    p_mc = sub.add_parser("montecarlo", help="thermal-motion error budget")
    common(p_mc)
    p_mc.add_argument("--seed", type=int)
    p_mc.add_argument("--preset", action="append", help="repeatable")
    p_mc.add_argument("--sweep", choices=("temperature", "depth"))
    p_mc.add_argument("--values", help="comma-separated sweep values (uK)")
    p_mc.add_argument("--temperature", type=float, help="temperature for depth sweeps (uK)")
    p_mc.add_argument("--shots", type=int)
    p_mc.add_argument("--beams", choices=_BEAM_CHOICES)
    p_mc.add_argument("--wavelength-nm", type=float, help="single-photon beam wavelength")
    p_mc.add_argument("--gate-ns", type=float)
    p_mc.add_argument("--deltap-ghz", type=float)
    p_mc.add_argument("--tb", type=float)
    p_mc.add_argument("--steps", type=int)
    p_mc.add_argument("--depth", type=float, help="trap depth |U0|/kB (uK)")
    p_mc.add_argument("--jobs", type=int, default=1)
    p_mc.set_defaults(func=_cmd_montecarlo)

    p_pre = sub.add_parser("presets", help="inspect bundled pulse presets")
    p_pre.add_argument("action", choices=("list",))
    p_pre.set_defaults(func=_cmd_presets)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
