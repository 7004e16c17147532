"""Command-line front end: single runs, sweeps, spectra and trajectories.

Configs are JSON with frequencies quoted as cycles per second over 2 pi
(g_over_2pi_hz etc.), matching how cavity experiments report parameters;
everything is converted to rad/s internally.  Exactly one of delta_over_g
or the (omega_a_over_2pi_hz, omega_c_over_2pi_hz) pair selects the frame:
the ratio form works in the atomic rotating frame where only the detuning
matters.

Exit codes: 0 success, 2 validity refusal (smallness parameter over 0.3
without allow_invalid), 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialize
from .dynamics import (
    TRAJECTORY_COLUMNS,
    compile_propagator,
    default_trajectory_times,
    trajectory_rows,
)
from .fields import FieldSpec
from .hilbert import atomic_ground_state, build_basis, control_excited_state
from .model import SystemParams, build_h0, build_hamiltonian, h0_diagonal
from .perturb import closed_form_corrections, validity_parameter, validity_grade
from .protocol import (
    NoSubradiantSectorError,
    ProtocolOptions,
    plan,
    run,
)

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration; see README for the JSON schema."""

    n_atoms: int
    g_over_2pi_hz: float
    delta_over_g: float | None
    omega_a_over_2pi_hz: float | None
    omega_c_over_2pi_hz: float | None
    field: FieldSpec
    options: ProtocolOptions
    allow_invalid: bool
    seed: int | None
    raw: dict

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        try:
            n_atoms = int(obj["n_atoms"])
            g_hz = float(obj["g_over_2pi_hz"])
        except KeyError as exc:
            raise ConfigError(f"config is missing required key {exc}") from exc
        if g_hz <= 0:
            raise ConfigError(f"g_over_2pi_hz must be positive, got {g_hz}")

        ratio = obj.get("delta_over_g")
        oa = obj.get("omega_a_over_2pi_hz")
        oc = obj.get("omega_c_over_2pi_hz")
        has_pair = oa is not None or oc is not None
        if (ratio is None) == (not has_pair):
            raise ConfigError(
                "supply exactly one of delta_over_g or the "
                "omega_a_over_2pi_hz/omega_c_over_2pi_hz pair"
            )
        if has_pair:
            if oa is None or oc is None:
                raise ConfigError("the omega pair needs both omega_a and omega_c")
            oa, oc = float(oa), float(oc)
            if oa <= 0 or oc <= 0:
                raise ConfigError("omega_*_over_2pi_hz must be positive")

        field = FieldSpec.from_json(obj.get("field", {"kind": "fock", "n": 0}))

        opt = obj.get("options", {})
        seed = obj.get("seed")
        options = ProtocolOptions(
            n_max=opt.get("n_max"),
            tm_branch=int(opt.get("tm_branch", 0)),
            phi_override=opt.get("phi_override"),
            excite_control=bool(opt.get("excite_control", True)),
            pt_times=int(opt.get("pt_times", 101)),
            seed=seed if seed is None else int(seed),
        )
        return cls(
            n_atoms=n_atoms,
            g_over_2pi_hz=g_hz,
            delta_over_g=None if ratio is None else float(ratio),
            omega_a_over_2pi_hz=oa if has_pair else None,
            omega_c_over_2pi_hz=oc if has_pair else None,
            field=field,
            options=options,
            allow_invalid=bool(obj.get("allow_invalid", False)),
            seed=seed if seed is None else int(seed),
            raw=obj,
        )

    def params(self) -> SystemParams:
        g = TWO_PI * self.g_over_2pi_hz
        if self.delta_over_g is not None:
            return SystemParams.from_detuning_ratio(self.n_atoms, g, self.delta_over_g)
        return SystemParams(
            n_atoms=self.n_atoms,
            omega_a=TWO_PI * self.omega_a_over_2pi_hz,
            omega_c=TWO_PI * self.omega_c_over_2pi_hz,
            g=g,
        )


def _load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_json(obj)


def _trajectory_state(config: RunConfig, params: SystemParams):
    """Initial state and occupied blocks for trajectory-style commands.

    Thermal mixtures are represented by their weight-dominant Fock
    component (a trajectory is a pure-state object).
    """
    field = config.field
    if field.is_mixture:
        weight, n = max(field.components(), key=lambda wn: wn[0])
        field = FieldSpec.fock(n)
    n_max = config.options.n_max
    if n_max is None:
        n_max = field.required_n_max(params.n_atoms)
    basis = build_basis(params.n_atoms, n_max)
    amps = field.amplitudes(n_max)
    if config.options.excite_control:
        state = control_excited_state(basis, amps)
    else:
        state = atomic_ground_state(basis, amps)
    state = state.pruned(config.options.block_weight_cutoff)
    return basis, state


# ---------------------------------------------------------------------------
# protocol
# ---------------------------------------------------------------------------


def cmd_protocol(config: RunConfig, out_dir: Path, trajectory_points: int = 400) -> int:
    params = config.params()
    validity = validity_parameter(params, config.field.mean_n)
    if validity_grade(validity) == "invalid" and not config.allow_invalid:
        print(
            f"refusing: validity parameter {validity:.3f} >= 0.3 "
            "(set allow_invalid to force the run)",
            file=sys.stderr,
        )
        return 2

    report = run(params, config.field, config.options)
    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.dump_json(
        {"config": config.raw, "report": report.to_dict()}, out_dir / "report.json"
    )

    basis, state = _trajectory_state(config, params)
    prop = compile_propagator(params, basis, block_ids=sorted(state.block_amps))
    times = default_trajectory_times(params, trajectory_points)
    serialize.write_csv(
        out_dir / "trajectory.csv",
        TRAJECTORY_COLUMNS,
        trajectory_rows(prop, state, times),
    )
    print(
        f"t_m = {report.t_m_microseconds:.6g} us, "
        f"fidelity = {report.fidelity_subradiant:.6f}, "
        f"dark-subspace weight = {report.dfs_weight:.6f}"
    )
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_AXES = ("N", "delta_ratio", "mean_n")

SWEEP_COLUMNS = (
    "point",
    "axis",
    "value",
    "n_atoms",
    "delta_over_g",
    "g_over_2pi_hz",
    "field_kind",
    "field_mean_n",
    "alpha_per_s",
    "t_m_seconds",
    "phi_radians",
    "fidelity_subradiant",
    "dfs_weight",
    "pt_coefficient_error",
    "emission_expectation",
    "validity",
    "validity_grade",
    "error",
)


def _point_config(raw: dict, axis: str, value: float) -> dict:
    cfg = json.loads(json.dumps(raw))  # deep copy
    cfg.pop("sweep", None)
    if axis == "N":
        if value != int(value):
            raise ConfigError(f"atom count must be an integer, got {value}")
        cfg["n_atoms"] = int(value)
    elif axis == "delta_ratio":
        if cfg.get("delta_over_g") is None:
            raise ConfigError("delta_ratio sweeps need a delta_over_g style config")
        cfg["delta_over_g"] = value
    elif axis == "mean_n":
        field = dict(cfg.get("field", {"kind": "fock", "n": 0}))
        if field["kind"] == "fock":
            if value != int(value):
                raise ConfigError(f"Fock sweep values must be integers, got {value}")
            field["n"] = int(value)
        elif field["kind"] == "coherent":
            field["amplitude_re"] = math.sqrt(value)
            field["amplitude_im"] = 0.0
        else:
            field["mean_n"] = value
        cfg["field"] = field
    else:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    return cfg


def _sweep_point(task: tuple[int, str, float, str]) -> dict:
    idx, axis, value, cfg_json = task
    row = {
        "point": idx,
        "axis": axis,
        "value": value,
        "error": "",
    }
    try:
        config = RunConfig.from_json(json.loads(cfg_json))
        params = config.params()
        report = run(params, config.field, config.options)
        row.update(
            n_atoms=params.n_atoms,
            delta_over_g=params.delta / params.g,
            g_over_2pi_hz=config.g_over_2pi_hz,
            field_kind=config.field.kind,
            field_mean_n=config.field.mean_n,
            alpha_per_s=report.alpha_per_s,
            t_m_seconds=report.t_m_seconds,
            phi_radians=report.phi_radians,
            fidelity_subradiant=report.fidelity_subradiant,
            dfs_weight=report.dfs_weight,
            pt_coefficient_error=report.pt_coefficient_error,
            emission_expectation=report.emission_expectation,
            validity=report.validity,
            validity_grade=report.validity_grade,
        )
    except Exception as exc:  # per-point failures stay in-row
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(config: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    sweep = config.raw.get("sweep")
    if not sweep or "axis" not in sweep or not sweep.get("values"):
        raise ConfigError('sweep runs need config["sweep"] = {"axis": ..., "values": [...]}')
    axis = sweep["axis"]
    values = list(sweep["values"])
    tasks = []
    for i, v in enumerate(values):
        point = _point_config(config.raw, axis, float(v))
        tasks.append((i, axis, float(v), json.dumps(point)))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: r["point"])

    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.write_csv(out_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    failures = sum(1 for r in rows if r["error"])
    print(f"swept {len(rows)} points over {axis} ({failures} failed)")
    return 0


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

SPECTRUM_COLUMNS = (
    "index",
    "eigenvalue_rad_s",
    "shift_from_e0_rad_s",
    "pt_level_rad_s",
    "pt_shift_rad_s",
    "abs_error_rad_s",
    "rel_error_vs_2alpha",
    "assignment",
)


def cmd_spectrum(config: RunConfig, out_dir: Path) -> int:
    section = config.raw.get("spectrum", {})
    params = config.params()
    if "block" in section:
        sector_n = int(section["block"])
    else:
        sector_n = int(section.get("photons", 0)) + 1
    h0_only = bool(section.get("h0_only", False))

    n_max = config.options.n_max
    if n_max is None:
        n_max = sector_n + params.n_atoms + 4
    basis = build_basis(params.n_atoms, n_max)
    if sector_n not in basis.block_ids:
        raise ConfigError(f"block {sector_n} out of range for this basis")

    builder = build_h0 if h0_only else build_hamiltonian
    h = builder(params, basis, block_ids=[sector_n]).block(sector_n)
    eigenvalues = np.linalg.eigvalsh(h)

    # Slow-model level set: shifted degenerate sector plus unshifted free levels.
    e0 = float(
        params.omega_a * (1 - params.n_atoms / 2.0) + params.omega_c * (sector_n - 1)
    )
    corrections = closed_form_corrections(params, sector_n)
    de1 = 0.0 if h0_only else corrections.delta_e1
    dei = 0.0 if h0_only or corrections.delta_ei is None else corrections.delta_ei
    levels = [(e0 + de1, "delta_e1")]
    if params.n_atoms >= 2:
        levels.extend([(e0 + dei, "delta_ei")] * (params.n_atoms - 1))
    free = sorted(set(float(x) for x in h0_diagonal(params, basis, sector_n)))
    for val in free:
        if abs(val - e0) > 1e-9 * max(abs(e0), abs(params.delta)):
            k = 1 + round((e0 - val) / params.delta)  # E(k) = E0 - (k-1) delta
            count = sum(
                1 for x in h0_diagonal(params, basis, sector_n) if abs(x - val) < 1e-6
            )
            levels.extend([(val, f"free_k{k}")] * count)
    levels.sort(key=lambda lv: lv[0])

    scale = 2.0 * abs(params.alpha)
    rows = []
    taken = [False] * len(levels)
    for i, ev in enumerate(eigenvalues):
        best, best_err = None, math.inf
        for j, (lv, _) in enumerate(levels):
            if not taken[j] and abs(ev - lv) < best_err:
                best, best_err = j, abs(ev - lv)
        taken[best] = True
        lv, label = levels[best]
        rows.append(
            {
                "index": i,
                "eigenvalue_rad_s": float(ev),
                "shift_from_e0_rad_s": float(ev - e0),
                "pt_level_rad_s": lv,
                "pt_shift_rad_s": lv - e0,
                "abs_error_rad_s": float(abs(ev - lv)),
                "rel_error_vs_2alpha": float(abs(ev - lv) / scale),
                "assignment": label,
            }
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.write_csv(out_dir / "spectrum.csv", SPECTRUM_COLUMNS, rows)
    print(f"block M={sector_n}: {len(rows)} eigenvalues written")
    return 0


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------


def cmd_evolve(config: RunConfig, out_dir: Path) -> int:
    params = config.params()
    evolve_cfg = config.raw.get("evolve", {})
    points = int(evolve_cfg.get("points", 400))
    t_final = evolve_cfg.get("t_final_seconds")
    if t_final is None:
        times = default_trajectory_times(params, points)
    else:
        times = np.linspace(0.0, float(t_final), points)

    basis, state = _trajectory_state(config, params)
    prop = compile_propagator(params, basis, block_ids=sorted(state.block_amps))
    rows = trajectory_rows(prop, state, times)
    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.write_csv(out_dir / "trajectory.csv", TRAJECTORY_COLUMNS, rows)
    print(f"wrote {len(rows)} trajectory samples")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subrad",
        description="Dispersive-cavity dark-state preparation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("protocol", "single preparation run: report JSON + trajectory CSV"),
        ("sweep", "parameter sweep to CSV, one row per grid point"),
        ("spectrum", "block eigenvalues with slow-model assignments to CSV"),
        ("evolve", "trajectory CSV without the phase gate"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--jobs", type=int, default=1, help="sweep worker processes")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        if args.seed is not None:
            raw = dict(config.raw)
            raw["seed"] = args.seed
            config = RunConfig.from_json(raw)
        out_dir = Path(args.out)
        if args.command == "protocol":
            points = int(config.raw.get("evolve", {}).get("points", 400))
            return cmd_protocol(config, out_dir, trajectory_points=points)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir, jobs=args.jobs)
        if args.command == "spectrum":
            return cmd_spectrum(config, out_dir)
        if args.command == "evolve":
            return cmd_evolve(config, out_dir)
        raise AssertionError("unreachable")
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NoSubradiantSectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
