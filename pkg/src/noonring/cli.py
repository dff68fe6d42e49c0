"""Command-line driver: run experiments, emit deterministic tables + manifests.

Experiment kinds
    protocol1   measurement statistics and NOON fidelities vs P*theta
    protocol2   deterministic-protocol fidelity vs P*theta
    readout     site-3 interference after a further t_m, with law fits
    spectrum    eigenvalue sweep over U/J with band assignment
    evolve      populations and effective-Hamiltonian overlap vs time
    physical    lattice calculator: couplings vs omega_r, integrable root
    robustness  fidelity vs detuning xi = U0 - U13, static or pulsed

Each run writes one delimited table (csv/tsv; header row plus a unit
comment) and a JSON manifest echoing the fully resolved configuration
and derived scales.  Identical inputs produce byte-identical tables;
the manifest carries the only timestamp.  Config files are INI-style
with sections [experiment], [model], [protocol], [spectrum], [evolve],
[robustness], [lattice]; unknown sections or keys are hard errors.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from configparser import ConfigParser
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dynamics import evolve_for
from .fock import QuantumState, enumerate_basis
from .lattice import (
    DY_MOMENT_CALIBRATED,
    QuadratureError,
    TrapParameters,
    derive,
    integrability_residual,
    model_parameters_from_lattice,
    recoil_energy,
    solve_integrability,
)
from .model import build_effective_hamiltonian_charges, build_full_hamiltonian
from .protocols import (
    ProtocolConfig,
    clear_caches,
    fit_readout_amplitudes,
    ideal_uber_noon,
    protocol_config,
    run_protocol1,
    run_protocol2,
    run_readout,
)
from .robustness import RobustnessConfig, run_robustness
from .spectrum import BandsUnresolvedError, assign_bands, sweep_spectrum

UNIT_NOTE = "# units: couplings and fields are angular frequencies (X/hbar, rad/s); times in s"

KINDS = ("protocol1", "protocol2", "readout", "spectrum", "evolve", "physical", "robustness")

PRESETS = {
    "set1": {"m": 4, "p": 11, "u": 75.876, "j": 24.886, "mu": 20.870, "nu": 20.870},
    "set2": {"m": 4, "p": 11, "u": 76.519, "j": 73.219, "mu": 15.168, "nu": 15.168},
}

_SCHEMA = {
    "experiment": {"kind", "preset", "out", "format", "seed", "grid"},
    "model": {"m", "p", "u", "j", "mu", "nu", "u0", "t_m_override"},
    "protocol": {"p_theta_max", "mode", "readout_protocol"},
    "spectrum": {"n_total", "u_over_j_min", "u_over_j_max", "points", "mu_over_j"},
    "evolve": {"t_max", "points"},
    "robustness": {"xi_over_j_max", "points", "n_dt", "mode", "source",
                   "protocol", "start_sign"},
    "lattice": {"scattering_length_a0", "magnetic_moment_mub", "kappa_sq",
                "dx", "dy", "omega_min_khz", "omega_max_khz", "points", "j"},
}


@dataclass
class ExperimentConfig:
    """Fully resolved run configuration (manifest mirrors this)."""

    kind: str
    preset: str
    m: int
    p: int
    u: float
    j: float
    mu: float
    nu: float
    u0: float = 0.0
    t_m_override: float | None = None
    grid: int = 64
    fmt: str = "csv"
    out: Path = Path("results")
    seed: int = 0
    p_theta_max: float = math.pi
    mode: str = "full"
    readout_protocol: int = 1
    spectrum: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    robustness: dict = field(default_factory=dict)
    lattice: dict = field(default_factory=dict)

    def base_protocol(self, p_theta: float = 0.0) -> ProtocolConfig:
        return protocol_config(
            self.m, self.p, u=self.u, j=self.j, mu=self.mu, nu=self.nu,
            p_theta=p_theta, u0=self.u0, t_m_override=self.t_m_override,
        )


def _read_config_file(path: Path) -> dict[str, dict[str, str]]:
    parser = ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    data: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(
                f"unknown config section [{section}]; known: {sorted(_SCHEMA)}")
        keys = dict(parser.items(section))
        unknown = set(keys) - _SCHEMA[section]
        if unknown:
            raise ValueError(
                f"unknown keys in [{section}]: {sorted(unknown)}; "
                f"known: {sorted(_SCHEMA[section])}")
        data[section] = keys
    return data


def _as_float(section: dict, key: str, default: float) -> float:
    return float(section[key]) if key in section else default


def _as_int(section: dict, key: str, default: int) -> int:
    return int(section[key]) if key in section else default


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Layer defaults < preset < config file < command-line flags."""
    file_data = _read_config_file(Path(args.config)) if args.config else {}
    experiment = file_data.get("experiment", {})

    kind = getattr(args, "kind", None) or experiment.get("kind")
    if kind is None:
        raise ValueError("no experiment kind given (subcommand or [experiment] kind)")
    if kind not in KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}; known: {list(KINDS)}")

    preset = args.preset or experiment.get("preset") or "set1"
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    model = dict(PRESETS[preset])
    model_file = file_data.get("model", {})
    custom = bool(model_file)
    for key in ("m", "p"):
        if key in model_file:
            model[key] = int(model_file[key])
    for key in ("u", "j", "mu", "nu"):
        if key in model_file:
            model[key] = float(model_file[key])

    protocol = file_data.get("protocol", {})
    fmt = args.format or experiment.get("format") or "csv"
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"format must be 'csv' or 'tsv', got {fmt!r}")
    t_m_override = model_file.get("t_m_override")
    return ExperimentConfig(
        kind=kind,
        preset=preset if not custom else f"{preset}+custom",
        m=model["m"], p=model["p"],
        u=model["u"], j=model["j"], mu=model["mu"], nu=model["nu"],
        u0=_as_float(model_file, "u0", 0.0),
        t_m_override=float(t_m_override) if t_m_override else None,
        grid=args.grid or _as_int(experiment, "grid", 64),
        fmt=fmt,
        out=Path(args.out or experiment.get("out") or "results"),
        seed=_as_int(experiment, "seed", 0),
        p_theta_max=_as_float(protocol, "p_theta_max", math.pi),
        mode=protocol.get("mode", "full"),
        readout_protocol=_as_int(protocol, "readout_protocol", 1),
        spectrum=file_data.get("spectrum", {}),
        evolve=file_data.get("evolve", {}),
        robustness=file_data.get("robustness", {}),
        lattice=file_data.get("lattice", {}),
    )


# --- table / manifest output ----------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_table(path: Path, header: list[str], rows: list[tuple], fmt: str) -> None:
    delimiter = "," if fmt == "csv" else "\t"
    with open(path, "w", newline="") as fh:
        fh.write(UNIT_NOTE + "\n")
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _manifest_base(cfg: ExperimentConfig, extras: dict) -> dict:
    payload = {
        "kind": cfg.kind,
        "preset": cfg.preset,
        "model": {"m": cfg.m, "p": cfg.p, "u": cfg.u, "j": cfg.j,
                  "mu": cfg.mu, "nu": cfg.nu, "u0": cfg.u0,
                  "t_m_override": cfg.t_m_override},
        "grid": cfg.grid,
        "format": cfg.fmt,
        "seed": cfg.seed,
        "seed_note": "reserved; all current experiments are deterministic",
        "units": "couplings/fields: rad/s (X/hbar); times: s",
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    payload.update(extras)
    return payload


def _derived_block(pc: ProtocolConfig) -> dict:
    return {
        "omega": pc.derived.omega,
        "t_m": pc.t_m,
        "t_nu": pc.t_nu,
        "t_mu_at_p_theta_max": pc.t_mu,
        "beta": pc.beta,
    }


# --- experiments ------------------------------------------------------------


def _p_theta_grid(cfg: ExperimentConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.p_theta_max, cfg.grid)


def _run_protocol1_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    basis = enumerate_basis(cfg.m + cfg.p)
    rows = []
    for p_theta in _p_theta_grid(cfg):
        pc = cfg.base_protocol(p_theta)
        for report in run_protocol1(pc, basis, mode=cfg.mode):
            rows.append((
                cfg.preset, cfg.m, cfg.p, float(p_theta),
                report.measurement.outcome, report.measurement.probability,
                report.fidelity, int(report.selected), report.elapsed_model_time,
            ))
    header = ["set", "m", "p", "p_theta", "r", "probability", "fidelity",
              "selected", "elapsed_s"]
    pc_max = cfg.base_protocol(cfg.p_theta_max)
    return rows, header, {"derived": _derived_block(pc_max), "mode": cfg.mode}


def _run_protocol2_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    basis = enumerate_basis(cfg.m + cfg.p)
    rows = []
    for p_theta in _p_theta_grid(cfg):
        pc = cfg.base_protocol(p_theta)
        report = run_protocol2(pc, basis, mode=cfg.mode)
        rows.append((cfg.preset, cfg.m, cfg.p, float(p_theta),
                     report.fidelity, report.elapsed_model_time))
    header = ["set", "m", "p", "p_theta", "fidelity", "elapsed_s"]
    pc_max = cfg.base_protocol(cfg.p_theta_max)
    return rows, header, {"derived": _derived_block(pc_max), "mode": cfg.mode}


def _run_readout_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    basis = enumerate_basis(cfg.m + cfg.p)
    rows = []
    zero_samples, m_samples = [], []
    two_sided = cfg.readout_protocol == 1
    for p_theta in _p_theta_grid(cfg):
        pc = cfg.base_protocol(p_theta)
        if two_sided:
            for report in run_protocol1(pc, basis, mode=cfg.mode):
                if not report.selected:
                    continue
                result = run_readout(report, pc, basis, mode=cfg.mode)
                joint = dict(result.joint)
                for outcome in (0, cfg.m):
                    rows.append((
                        cfg.preset, float(p_theta), report.measurement.outcome,
                        outcome, joint.get(outcome, 0.0),
                        result.laws["P_I(.,0)"], result.laws["P_I(.,M)"],
                    ))
                zero_samples.append((float(p_theta), joint.get(0, 0.0)))
                m_samples.append((float(p_theta), joint.get(cfg.m, 0.0)))
        else:
            report = run_protocol2(pc, basis, mode=cfg.mode)
            result = run_readout(report, pc, basis, mode=cfg.mode)
            conditional = dict(result.outcomes)
            for outcome in (0, cfg.m):
                rows.append((
                    cfg.preset, float(p_theta), "", outcome,
                    conditional.get(outcome, 0.0),
                    result.laws["P_II(0)"], result.laws["P_II(M)"],
                ))
            zero_samples.append((float(p_theta), conditional.get(0, 0.0)))
            m_samples.append((float(p_theta), conditional.get(cfg.m, 0.0)))
    if two_sided:
        header = ["set", "p_theta", "r", "readout_r", "joint_probability",
                  "law_half_cos2", "law_half_sin2"]
        fits = {
            "c00": 2.0 * fit_readout_amplitudes(zero_samples, "cos2"),
            "cMM": 2.0 * fit_readout_amplitudes(m_samples, "sin2"),
        }
    else:
        header = ["set", "p_theta", "r", "readout_r", "probability",
                  "law_shifted_sin2", "law_shifted_cos2"]
        fits = {
            "c0": fit_readout_amplitudes(zero_samples, "shifted_sin2"),
            "cM": fit_readout_amplitudes(m_samples, "shifted_cos2"),
        }
    pc_max = cfg.base_protocol(cfg.p_theta_max)
    return rows, header, {
        "derived": _derived_block(pc_max), "mode": cfg.mode,
        "readout_protocol": cfg.readout_protocol, "fits": fits,
    }


def _run_spectrum_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    section = cfg.spectrum
    n_total = _as_int(section, "n_total", cfg.m + cfg.p)
    lo = _as_float(section, "u_over_j_min", 0.0)
    hi = _as_float(section, "u_over_j_max", 25.0)
    points = _as_int(section, "points", 40)
    mu_over_j = _as_float(section, "mu_over_j", 0.0)
    basis = enumerate_basis(n_total)
    grid = np.linspace(lo, hi, points)
    sweep = sweep_spectrum(basis, grid, mu=mu_over_j)
    rows = []
    resolved_points = 0
    for i, ratio in enumerate(sweep.u_over_j):
        try:
            assignment = assign_bands(sweep.eigenvalues[i], n_total)
            resolved_points += 1
            labels = [assignment.band_of(k) for k in range(basis.size)]
        except BandsUnresolvedError:
            labels = [("", "")] * basis.size
        for k in range(basis.size):
            rows.append((float(ratio), k, float(sweep.eigenvalues[i][k]),
                         labels[k][0], labels[k][1]))
    header = ["u_over_j", "index", "e_over_j", "band_m", "band_p"]
    return rows, header, {
        "n_total": n_total, "mu_over_j": mu_over_j,
        "resolved_points": resolved_points, "total_points": points,
    }


def _run_evolve_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    basis = enumerate_basis(cfg.m + cfg.p)
    pc = cfg.base_protocol(0.0)
    section = cfg.evolve
    t_max = _as_float(section, "t_max", pc.t_m)
    points = _as_int(section, "points", 160)
    h_full = build_full_hamiltonian(pc.params, basis)
    h_eff = build_effective_hamiltonian_charges(basis, pc.n_total, pc.derived)
    initial = QuantumState.from_fock(basis, (cfg.m, cfg.p, 0, 0))
    uber = ideal_uber_noon(pc, basis, stage="pre_field")
    corners = [
        basis.index_of((cfg.m, cfg.p, 0, 0)),
        basis.index_of((0, cfg.p, cfg.m, 0)),
        basis.index_of((cfg.m, 0, 0, cfg.p)),
        basis.index_of((0, 0, cfg.m, cfg.p)),
    ]
    rows = []
    for t in np.linspace(0.0, t_max, points):
        full_state = evolve_for(initial, h_full, float(t))
        eff_state = evolve_for(initial, h_eff, float(t))
        weights = np.abs(full_state.amplitudes[corners]) ** 2
        rows.append((
            float(t), *map(float, weights),
            abs(full_state.overlap(uber)) ** 2,
            abs(full_state.overlap(eff_state)),
        ))
    header = ["t_s", "p_MP00", "p_0PM0", "p_M00P", "p_00MP",
              "uber_noon_population", "effective_overlap"]
    return rows, header, {"derived": _derived_block(pc), "t_max": t_max}


def _trap_from_config(cfg: ExperimentConfig) -> TrapParameters:
    section = cfg.lattice
    return TrapParameters(
        scattering_length_a0=_as_float(section, "scattering_length_a0", -21.0),
        magnetic_moment_mub=_as_float(section, "magnetic_moment_mub", DY_MOMENT_CALIBRATED),
        kappa_sq=_as_float(section, "kappa_sq", 1.489),
    )


def _run_physical_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    section = cfg.lattice
    trap = _trap_from_config(cfg)
    lo_khz = _as_float(section, "omega_min_khz", 20.0)
    hi_khz = _as_float(section, "omega_max_khz", 60.0)
    points = _as_int(section, "points", 40)
    dx = _as_float(section, "dx", 0.2e-6)
    dy = _as_float(section, "dy", -0.2e-6)
    j_input = _as_float(section, "j", cfg.j)
    rows = []
    for freq_khz in np.linspace(lo_khz, hi_khz, points):
        omega = 2.0 * math.pi * freq_khz * 1e3
        d = derive(trap, omega)
        rows.append((float(freq_khz), d.u0, d.u12, d.u13, d.u0 - d.u13))
    header = ["omega_r_over_2pi_khz", "u0", "u12", "u13", "residual"]
    root = solve_integrability(
        trap, bracket=(2.0 * math.pi * lo_khz * 1e3, 2.0 * math.pi * hi_khz * 1e3))
    at_root = derive(trap, root.omega_r, dx=dx, dy=dy)
    params = model_parameters_from_lattice(at_root, j=j_input)
    extras = {
        "trap": {
            "scattering_length_a0": trap.scattering_length_a0,
            "magnetic_moment_mub": trap.magnetic_moment_mub,
            "kappa_sq": trap.kappa_sq,
            "wavelength_m": trap.wavelength,
            "w1_m": trap.w1, "w_b_m": trap.w_b,
            "delta": trap.delta,
        },
        "root": {
            "omega_r_rad_s": root.omega_r,
            "omega_r_over_2pi_khz": root.omega_r / (2.0 * math.pi * 1e3),
            "u0": root.u0, "u13": root.u13, "u12": root.u12,
            "residual": root.residual,
        },
        "derived_at_root": {
            "recoil_rad_s": at_root.recoil,
            "recoil_over_2pi_khz": at_root.recoil / (2.0 * math.pi * 1e3),
            "v0_over_recoil": at_root.v0_over_recoil,
            "coupling_u": at_root.coupling_u,
            "mu": at_root.mu, "nu": at_root.nu,
            "omega_z_rad_s": at_root.omega_z,
            "omega_z_check_rad_s": at_root.omega_z_check,
        },
        "model_parameters": params.to_dict(),
        "displacement_m": {"dx": dx, "dy": dy},
    }
    return rows, header, extras


def _run_robustness_experiment(cfg: ExperimentConfig) -> tuple[list, list, dict]:
    basis = enumerate_basis(cfg.m + cfg.p)
    section = cfg.robustness
    xi_max = _as_float(section, "xi_over_j_max", 0.02) * cfg.j
    points = _as_int(section, "points", 20)
    n_dt = _as_int(section, "n_dt", 100)
    mode = section.get("mode", "pulsed")
    source = section.get("source", "direct")
    protocol = _as_int(section, "protocol", 1)
    start_sign = _as_int(section, "start_sign", 1)
    base = cfg.base_protocol(p_theta=math.pi / 2.0)
    rcfg = RobustnessConfig(
        base=base, xi_values=tuple(np.linspace(0.0, xi_max, points)),
        n_dt=n_dt, mode=mode, source=source, protocol=protocol,
        start_sign=start_sign,
        trap=_trap_from_config(cfg) if source == "physical" else None,
    )
    results = run_robustness(rcfg, basis)
    rows = [
        (mode, source, n_dt, point.xi, point.xi_over_j, point.fidelity,
         point.probability if point.probability is not None else "")
        for point in results
    ]
    header = ["mode", "source", "n_dt", "xi", "xi_over_j", "fidelity", "probability"]
    return rows, header, {
        "derived": _derived_block(base), "protocol": protocol,
        "n_dt": n_dt, "mode": mode, "source": source, "start_sign": start_sign,
        "p_theta": math.pi / 2.0,
    }


_EXPERIMENTS = {
    "protocol1": _run_protocol1_experiment,
    "protocol2": _run_protocol2_experiment,
    "readout": _run_readout_experiment,
    "spectrum": _run_spectrum_experiment,
    "evolve": _run_evolve_experiment,
    "physical": _run_physical_experiment,
    "robustness": _run_robustness_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Execute one experiment; returns the written file paths."""
    clear_caches()
    rows, header, extras = _EXPERIMENTS[cfg.kind](cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    extension = "csv" if cfg.fmt == "csv" else "tsv"
    table_path = cfg.out / f"{cfg.kind}.{extension}"
    manifest_path = cfg.out / f"{cfg.kind}_manifest.json"
    _write_table(table_path, header, rows, cfg.fmt)
    extras = dict(extras)
    extras["output_table"] = table_path.name
    _write_manifest(manifest_path, _manifest_base(cfg, extras))
    return [table_path, manifest_path]


def list_presets(machine: bool = False) -> str:
    """Text (or JSON) listing of the built-in parameter sets."""
    payload = {}
    for name, values in PRESETS.items():
        pc = protocol_config(values["m"], values["p"], u=values["u"],
                             j=values["j"], mu=values["mu"], nu=values["nu"],
                             p_theta=math.pi)
        payload[name] = {
            **values,
            "omega": pc.derived.omega,
            "t_m": pc.t_m,
            "t_nu": pc.t_nu,
            "t_mu_at_p_theta_pi": pc.t_mu,
            "beta": pc.beta,
        }
    if machine:
        return json.dumps(payload, indent=2, sort_keys=True)
    lines = []
    for name, values in payload.items():
        lines.append(f"{name}: four-site ring, M={values['m']}, P={values['p']}")
        lines.append(
            f"  couplings (rad/s): U={values['u']:g}  J={values['j']:g}  "
            f"mu={values['mu']:g}  nu={values['nu']:g}")
        lines.append(
            f"  derived: Omega={values['omega']:.6g} rad/s  t_m={values['t_m']:.6g} s  "
            f"t_nu={values['t_nu']:.6g} s  t_mu(P*theta=pi)={values['t_mu_at_p_theta_pi']:.6g} s  "
            f"beta={values['beta']}")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad usage; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noonring",
                     description="Four-site dipolar Bose-Hubbard ring: NOON-state "
                                 "protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    presets = sub.add_parser("presets", help="list built-in parameter sets")
    presets.add_argument("--machine", action="store_true", help="emit JSON")

    def add_common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="parameter set")
        p.add_argument("--grid", type=int, help="sweep points")
        p.add_argument("--out", help="output directory (default: results)")
        p.add_argument("--format", choices=("csv", "tsv"), help="table format")

    runner = sub.add_parser("run", help="run the experiment named in a config file")
    add_common(runner)

    for kind in KINDS:
        kind_parser = sub.add_parser(kind, help=f"run the {kind} experiment")
        add_common(kind_parser)
        kind_parser.set_defaults(kind=kind)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            print(list_presets(machine=args.machine))
            return 0
        if args.command == "run" and not args.config:
            raise ValueError("'run' requires --config")
        cfg = resolve_config(args)
        paths = run_experiment(cfg)
        for path in paths:
            print(path)
        return 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
