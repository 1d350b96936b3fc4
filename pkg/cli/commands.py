# cli/commands.py

"""
Command implementations behind main.py. Each returns a process exit code:

    0  ok
    1  a fidelity check failed
    2  bad configuration or N outside the dense-simulation budget
    3  hard physics-regime violation
"""

import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from engine.analysis import SweepTable, sweep_drive_ladder, sweep_stagger, sweep_success
from engine.microwave_stage import (
    atom_space,
    cavity_refocusing_phase,
    dispersive_validity,
    effective_couplings,
    frame_equivalence_chain,
    make_timing_plan,
    min_drive,
    photon_number_pairwise,
    refocused_time,
)
from engine.protocol import ProtocolResult, build_protocol_config, run_protocol
from utils.config import RunConfig, load_run_config
from utils.log import get_logger
from utils.schema import (
    CavityBellError,
    ConfigError,
    MicrowaveParams,
    RegimeError,
    mhz_to_rad_per_us,
)

logger = get_logger("cli")

EXIT_OK, EXIT_FIDELITY, EXIT_CONFIG, EXIT_REGIME = 0, 1, 2, 3
MIN_N, MAX_N = 2, 4
PROTOCOL_FIDELITY = 1.0 - 1e-6
FRAME_FIDELITY = 1.0 - 1e-6
LADDER_SLACK = 1e-3


# -------------------------------------------------------------------------
# Output helpers
# -------------------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over the target."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def report_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def table_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _complex(z: complex) -> List[float]:
    return [float(z.real), float(z.imag)]


def _output_path(run: RunConfig, out: Optional[str], default_name: str) -> Path:
    return Path(out) if out else Path(run.output.dir) / default_name


def _progress(quiet: bool) -> bool:
    return not quiet and sys.stderr.isatty()


# -------------------------------------------------------------------------
# Error mapping
# -------------------------------------------------------------------------

def guarded(fn, *args, **kwargs) -> int:
    """Run a command and turn known failures into exit codes."""
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        logger.error(f"config error: {exc}")
        return EXIT_CONFIG
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(x) for x in first["loc"])
        logger.error(f"invalid parameters: {loc}: {first['msg']}" if loc else f"invalid parameters: {first['msg']}")
        return EXIT_CONFIG
    except RegimeError as exc:
        logger.error(f"regime violation: {exc}")
        return EXIT_REGIME
    except CavityBellError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_REGIME


# -------------------------------------------------------------------------
# bell / ghz
# -------------------------------------------------------------------------

def _protocol_report(result: ProtocolResult) -> Dict[str, Any]:
    cfg = result.config
    rows = []
    for r in result.outcome_table:
        rows.append({
            "pattern": r.pattern,
            "probability": r.probability,
            "label": r.label,
            "phase": _complex(r.phase),
            "fidelity": r.fidelity,
            "photon_amplitudes": None if r.photon_state is None
            else [_complex(z) for z in r.photon_state.amplitudes],
        })
    return {
        "parameters": {
            "units": {"frequency": "rad/us", "time": "us"},
            "n_atoms": cfg.n_atoms,
            "optical": [p.model_dump() for p in cfg.optical],
            "microwave": cfg.microwave.model_dump(),
        },
        "timing_plan": cfg.plan.model_dump(mode="json"),
        "optical_stage": [
            {"tau_us": o.tau, "omega": o.omega, "success_prob": o.success_prob}
            for o in result.optical
        ],
        "total_success_prob": result.total_success_prob,
        "outcomes": rows,
        "warnings": list(result.warnings),
    }


def _run_protocol_command(run: RunConfig, n_atoms: int, out: Optional[str], name: str) -> int:
    if not MIN_N <= n_atoms <= MAX_N:
        logger.error(f"N={n_atoms} outside the dense-simulation budget [{MIN_N}, {MAX_N}]")
        return EXIT_CONFIG

    optical = run.optical_params(n_atoms)
    mw = run.microwave_params(n_atoms)
    cfg = build_protocol_config(
        optical,
        mw,
        drive_multiple=run.microwave.drive_multiple,
        n_branch=run.plan.n_branch,
        G_override=mhz_to_rad_per_us(run.microwave.G_mhz) if run.microwave.G_mhz is not None else None,
    )
    result = run_protocol(cfg)
    report = _protocol_report(result)
    path = _output_path(run, out, name)
    write_atomic(path, report_json(report))

    for r in result.outcome_table:
        logger.info(f"{r.pattern}: p={r.probability:.6f} {r.label} F={r.fidelity:.10f}")
    logger.info(f"P_total={result.total_success_prob:.6f} -> {path}")

    failed = [r.pattern for r in result.outcome_table
              if r.probability > 0.0 and r.fidelity < PROTOCOL_FIDELITY]
    if failed:
        logger.error(f"outcomes below fidelity {PROTOCOL_FIDELITY}: {', '.join(failed)}")
        return EXIT_FIDELITY
    return EXIT_OK


def cmd_bell(config_path: str, out: Optional[str] = None) -> int:
    run = load_run_config(config_path)
    if run.n_atoms != 2:
        raise ConfigError(f"bell needs n_atoms = 2, got {run.n_atoms}", "n_atoms")
    return _run_protocol_command(run, 2, out, "bell.json")


def cmd_ghz(config_path: str, n_atoms: int, out: Optional[str] = None) -> int:
    run = load_run_config(config_path)
    return _run_protocol_command(run, n_atoms, out, f"ghz_n{n_atoms}.json")


# -------------------------------------------------------------------------
# verify
# -------------------------------------------------------------------------

def _verify_drive(run: RunConfig, mw: MicrowaveParams) -> float:
    if run.microwave.G_mhz is not None:
        return mhz_to_rad_per_us(run.microwave.G_mhz)
    lam = effective_couplings(mw.g, mw.delta).lam
    floor = min_drive(mw, run.microwave.drive_multiple)
    if lam <= 0.0:
        return floor
    return make_timing_plan(lam, mw.n_atoms, floor, n_branch=run.plan.n_branch).G_required


def _ladder_rises(values: List[float]) -> bool:
    return all(b >= a - LADDER_SLACK for a, b in zip(values, values[1:]))


def cmd_verify(config_path: str, out: Optional[str] = None, quiet: bool = False) -> int:
    """
    Frame chain, dispersive validity per Fock state and the drive ladder.

    Without verify.t_us the comparison time is the cavity-refocused time
    nearest t0 = pi / 4 lambda; the strong-driving cavity displacement only
    vanishes there.
    """
    run = load_run_config(config_path)
    spec = run.verify
    cutoff = run.microwave.fock_cutoff
    for n in spec.fock_n:
        if n < 0 or n + 2 > cutoff:
            raise ConfigError(f"Fock state n={n} needs fock_cutoff >= {n + 2}, have {cutoff}", "verify.fock_n")

    mw = run.microwave_params()
    mw = mw.model_copy(update={"G": _verify_drive(run, mw)})
    lam = effective_couplings(mw.g, mw.delta).lam
    t0 = math.pi / (4.0 * lam) if lam > 0.0 else None
    if spec.t_us is not None:
        t = spec.t_us
    elif t0 is not None:
        t = refocused_time(mw, t0)
    else:
        t = 1.0
    psi_atoms = atom_space(mw.n_atoms).basis(*([0] * mw.n_atoms))

    chain = frame_equivalence_chain(mw, psi_atoms, t, fock_n=0, dt=spec.dt_us)
    reports = [dispersive_validity(mw, psi_atoms, n, t=t, dt=spec.dt_us) for n in spec.fock_n]
    dispersive = [
        {
            "fock_n": rep.fock_n,
            "fidelity": rep.fidelity,
            "leakage": rep.leakage,
            "refocusing_phase": rep.refocusing_phase,
        }
        for rep in reports
    ]
    pairwise = photon_number_pairwise(reports)
    ladder = sweep_drive_ladder(mw, psi_atoms, spec.drive_ladder, t=t, dt=spec.dt_us, progress=_progress(quiet))
    ladder_effective = ladder.column("interaction_vs_effective")

    checks = {
        "full_vs_interaction": chain["full_vs_interaction"] >= FRAME_FIDELITY,
        "interaction_vs_dressed": chain["interaction_vs_dressed"] >= FRAME_FIDELITY,
        "dressed_vs_strong": chain["dressed_vs_strong"] >= spec.min_fidelity,
        "strong_vs_effective": chain["strong_vs_effective"] >= spec.min_fidelity,
        "interaction_vs_effective": chain["interaction_vs_effective"] >= spec.min_fidelity,
        "dispersive": all(d["fidelity"] >= spec.min_fidelity for d in dispersive),
        "photon_number_pairwise": all(f >= spec.min_fidelity for f in pairwise.values()),
        "drive_ladder": _ladder_rises(ladder_effective)
        and (not ladder_effective or ladder_effective[-1] >= spec.min_fidelity),
    }
    report = {
        "parameters": {
            "units": {"frequency": "rad/us", "time": "us"},
            "microwave": mw.model_dump(),
            "t_us": t,
            "t0_us": t0,
            "refocusing_phase_t0": cavity_refocusing_phase(mw, t0) if t0 is not None else None,
            "dt_us": spec.dt_us,
            "G_over_g": mw.G / mw.g if mw.g > 0.0 else None,
            "delta_over_g": mw.delta / mw.g if mw.g > 0.0 else None,
        },
        "chain": chain,
        "dispersive": dispersive,
        "photon_number_pairwise": pairwise,
        "drive_ladder": [dict(zip(ladder.columns, row)) for row in ladder.rows],
        "checks": checks,
        "warnings": mw.regime_warnings(),
    }
    path = _output_path(run, out, "verify.json")
    write_atomic(path, report_json(report))

    logger.info(f"comparison time t={t:.6g} us")
    for name, value in chain.items():
        logger.info(f"{name}: {value:.10f}")
    for d in dispersive:
        logger.info(
            f"dispersive n={d['fock_n']}: F={d['fidelity']:.6f} leakage={d['leakage']:.3e} "
            f"refocus={d['refocusing_phase']:.4f}"
        )
    for pair, value in pairwise.items():
        logger.info(f"photon-number overlap {pair}: {value:.6f}")
    if not all(checks.values()):
        logger.error(f"verification failed: {[k for k, ok in checks.items() if not ok]}")
        return EXIT_FIDELITY
    return EXIT_OK


# -------------------------------------------------------------------------
# sweep
# -------------------------------------------------------------------------

def cmd_sweep(config_path: str, kind: str, out: Optional[str] = None, quiet: bool = False) -> int:
    run = load_run_config(config_path)
    progress = _progress(quiet)

    if kind == "success":
        spec = run.sweep.success
        if spec is None:
            raise ConfigError("missing success sweep", "sweep.success")
        table = sweep_success(
            [mhz_to_rad_per_us(x) for x in spec.gamma_mhz],
            [mhz_to_rad_per_us(x) for x in spec.kappa_mhz],
            mhz_to_rad_per_us(spec.h_mhz),
            progress=progress,
        )
    elif kind == "stagger":
        spec = run.sweep.stagger
        if spec is None:
            raise ConfigError("missing stagger sweep", "sweep.stagger")
        bad = [n for n in spec.n_atoms if n not in (2, 3)]
        if bad:
            raise ConfigError(f"stagger supports N in {{2, 3}}, got {bad}", "sweep.stagger.n_atoms")
        mw = run.microwave_params(2)
        lam = effective_couplings(mw.g, mw.delta).lam
        if spec.G_mhz is not None:
            G = mhz_to_rad_per_us(spec.G_mhz)
        else:
            G = make_timing_plan(
                lam, 2, min_drive(mw, run.microwave.drive_multiple), n_branch=run.plan.n_branch
            ).G_required
        table = sweep_stagger(
            spec.dt_over_t0, spec.n_atoms, lam, G=G,
            schedule=spec.schedule, trailing_drive=spec.trailing_drive, progress=progress,
        )
    else:
        raise ConfigError(f"unknown sweep kind {kind!r}", "kind")

    path = _output_path(run, out, f"sweep_{kind}.csv")
    write_atomic(path, table_csv(table))
    logger.info(f"{len(table.rows)} rows -> {path}")
    return EXIT_OK
