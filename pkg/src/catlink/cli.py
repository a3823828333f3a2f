"""Command-line front end.

Each subcommand validates the configuration, computes its report entirely in
memory, and only then writes files, so validation failures never leave
partial output.  Every invocation writes into ``<out>/<command>/`` a primary
CSV (or JSON), a ``summary.json`` with the headline numbers and the toolkit
version, and a ``resolved_config.ini`` snapshot, and prints the summary to
stdout.  Outputs are byte-identical across reruns with the same
configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from typing import Any, Optional

import numpy as np

from . import __version__
from . import catqubit as cq
from . import pulseopt as po
from . import scenarios as sn
from . import transducer as td
from . import device as dv
from .config import ConfigError, RunConfig, load_config
from .repeater import ChainParams, LinkParams, mean_time, monte_carlo_time

TWO_PI = 2.0 * math.pi
CONFIG_ENV_VAR = "CATLINK_CONFIG"


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


class _Report:
    """In-memory report: tables + summary, written atomically at the end."""

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.tables: dict[str, tuple[list[str], list[list[Any]]]] = {}
        self.summary: dict[str, Any] = {"command": command,
                                        "catlink_version": __version__}

    def add_table(self, name: str, header: list[str], rows: list[list[Any]]):
        self.tables[name] = (header, rows)

    def write(self, out_root: str, fmt: str) -> str:
        out_dir = os.path.join(out_root, self.command)
        os.makedirs(out_dir, exist_ok=True)
        for name, (header, rows) in self.tables.items():
            if fmt == "csv":
                path = os.path.join(out_dir, f"{name}.csv")
                buf = io.StringIO()
                writer = csv.writer(buf, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(v) for v in row])
                _write_text(path, buf.getvalue())
            else:
                path = os.path.join(out_dir, f"{name}.json")
                payload = [dict(zip(header, row)) for row in rows]
                _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.summary["resolved_config"] = self.config.resolved_ini()
        _write_text(os.path.join(out_dir, "summary.json"),
                    json.dumps(self.summary, indent=2, sort_keys=True,
                               default=_json_default) + "\n")
        _write_text(os.path.join(out_dir, "resolved_config.ini"),
                    self.config.resolved_ini())
        return out_dir


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _row_params(config: RunConfig) -> list[tuple[float, cq.CatQubitParams, float, float]]:
    """(loss ratio, params, drive ratio, coupling ratio) per configured row."""
    sec = config["catqubit"]
    rows = []
    for i, ratio in enumerate(sec["loss_ratios"]):
        if sec["kerr_hz"]:
            kerr = TWO_PI * sec["kerr_hz"][i]
        else:
            try:
                kerr = sn.TABLE_ROW_DEFAULTS[ratio][0]
            except KeyError:
                raise ConfigError(
                    f"[catqubit] loss_ratios: no default kerr for {ratio:g}; set kerr_hz")
        params = cq.CatQubitParams(kerr=kerr, kappa=kerr / ratio,
                                   alpha=sec["alpha"], dim=sec["dim"])
        rows.append((ratio, params, sec["drive_ratios"][i], sec["coupling_ratios"][i]))
    return rows


# -- subcommands ---------------------------------------------------------------


def cmd_gates(config: RunConfig, args) -> _Report:
    report = _Report("gates", config)
    header = ["operation", "K_rad_per_s", "kappa_per_s", "duration_s",
              "duration_Kt", "fidelity"]
    rows = []
    for ratio, params, drive_ratio, coupling_ratio in _row_params(config):
        table = cq.gate_report(params, drive_ratio, coupling_ratio,
                               drive_duration_kt=config.get("catqubit", "drive_duration_kt"),
                               dim_per_cavity=config.get("catqubit", "two_qubit_dim"))
        for r in table:
            rows.append([r.operation, r.kerr, r.kappa, r.duration_s,
                         r.duration_kt, r.fidelity])
    report.add_table("gates", header, rows)
    report.summary["rows"] = len(rows)
    return report


def cmd_grape(config: RunConfig, args) -> _Report:
    report = _Report("grape", config)
    sec = config["grape"]
    ratio = sec["loss_ratio"]
    max_iters = args.iters if args.iters is not None else sec["max_iters"]
    seed = args.seed if args.seed is not None else (
        int(sec["seed"]) if sec["seed"] else None)
    params = cq.CatQubitParams(kerr=1.0, kappa=1.0 / ratio,
                               alpha=config.get("catqubit", "alpha"))
    total_time = sec["duration_kt"]  # K = 1, so K*t is t
    bound = sec["amplitude_bound_k"]

    for direction, maker in (("drive", po.drive_problem), ("undrive", po.undrive_problem)):
        problem = maker(params, total_time=total_time, n_segments=sec["n_segments"],
                        amplitude_bound=bound)
        result = po.grape_optimize(problem, max_iters=max_iters, seed=seed)
        lossy = po.evaluate_pulse(problem, result.schedule)
        seg = result.schedule.segment_values
        dt = result.schedule.duration / sec["n_segments"]
        rows = [[k * dt, (k + 1) * dt,
                 float(np.real(seg["two_photon"][k])),
                 float(np.real(seg["two_photon_orthogonal"][k]))]
                for k in range(sec["n_segments"])]
        report.add_table(f"pulse_{direction}",
                         ["t_start_over_K", "t_end_over_K", "E_p_over_K",
                          "E_p_perp_over_K"], rows)
        report.summary[direction] = {
            "optimized_fidelity": result.fidelity,
            "lossy_fidelity": lossy,
            "iterations": result.n_iterations,
            "converged": result.converged,
        }
    return report


def cmd_device(config: RunConfig, args) -> _Report:
    report = _Report("device", config)
    sec = config["device"]
    lists = {k: sec[k] for k in ("anharmonicity_hz", "coupling_hz",
                                 "cavity_decay_hz", "qubit_decay_hz")}
    n_rows = max(len(v) for v in lists.values())
    for key, vals in lists.items():
        if len(vals) not in (1, n_rows):
            raise ConfigError(f"[device] {key}: expected 1 or {n_rows} values")
    header = ["kappa_c_hz", "gamma_hz", "g_hz", "Delta_hz", "K_q_hz",
              "K_hz", "kappa_hz", "kappa_eff_hz"]
    rows = []
    for i in range(n_rows):
        pick = {k: (v[i] if len(v) == n_rows else v[0]) for k, v in lists.items()}
        dp = dv.DeviceParams(
            cavity_freq=TWO_PI * sec["cavity_freq_hz"],
            qubit_freq=TWO_PI * sec["qubit_freq_hz"],
            anharmonicity=TWO_PI * pick["anharmonicity_hz"],
            coupling=TWO_PI * pick["coupling_hz"],
            cavity_decay=TWO_PI * pick["cavity_decay_hz"],
            qubit_decay=TWO_PI * pick["qubit_decay_hz"],
        )
        derived = dv.derive_device(dp, cavity_levels=sec["cavity_levels"],
                                   qubit_levels=sec["qubit_levels"],
                                   fit_kappa_eff=sec["fit_kappa_eff"])
        rows.append([pick["cavity_decay_hz"], pick["qubit_decay_hz"],
                     pick["coupling_hz"], derived.detuning / TWO_PI,
                     pick["anharmonicity_hz"], derived.kerr / TWO_PI,
                     derived.kappa / TWO_PI, derived.kappa_eff / TWO_PI])
    report.add_table("device", header, rows)
    report.summary["rows"] = n_rows
    if rows:
        report.summary["K_over_kappa"] = [r[5] / r[6] for r in rows]
    return report


def cmd_transduce(config: RunConfig, args) -> _Report:
    report = _Report("transduce", config)
    sec = config["transducer"]
    rows = []
    for linewidth in sec["natural_linewidth_hz"]:
        params = td.TransducerParams(
            ensemble_coupling=TWO_PI * sec["ensemble_coupling_hz"],
            natural_linewidth=TWO_PI * linewidth,
            spin_decay=TWO_PI * sec["spin_decay_hz"],
            spin_dephasing=TWO_PI * sec["spin_dephasing_hz"],
            cavity_decay=TWO_PI * sec["cavity_decay_hz"],
            n_bins=sec["n_bins"], span_fwhm=sec["span_fwhm"],
            lineshape=sec["lineshape"], gamma2_model=sec["gamma2_model"],
            echo_efficiency=sec["echo_efficiency"],
            coupling_efficiency=sec["coupling_efficiency"])
        result = td.spin_transfer_efficiency(params)
        budget = td.transduction_budget(params, result)
        rows.append([linewidth, result.efficiency, result.cavity_population,
                     result.lost_population, budget, result.converged])
    report.add_table("transduce",
                     ["natural_linewidth_hz", "eta_transfer", "cavity_residue",
                      "lost", "budget_p", "converged"], rows)
    report.summary["eta_transfer"] = rows[0][1]
    report.summary["budget_p"] = rows[0][4]
    return report


def _chain_scenarios(config: RunConfig) -> list[sn.Scenario]:
    ch, li, ra, co = (config["chain"], config["link"], config["rates"],
                      config["comparators"])
    t_o = None if li["operation_time_s"] == "auto" else float(li["operation_time_s"])
    out = []
    for m, policy in zip(ch["multiplexing"], ch["storage_policy"]):
        out.append(sn.Scenario(
            name=f"m{int(m)}", loss_ratio=ch["loss_ratio"],
            nesting_level=ch["nesting_level"], multiplexing=int(m),
            storage_policy=policy,
            emission_probability=li["emission_probability"],
            detection_efficiency=li["detection_efficiency"],
            swap_probability=ch["swap_probability"],
            attenuation_km=li["attenuation_km"],
            transfer_lifetime_s=ch["transfer_lifetime_s"],
            operation_time_s=t_o,
            source_rate=co["source_rate_hz"],
            bracket_km=(ra["bracket_min_km"], ra["bracket_max_km"])))
    return out


_REPORT_HEADER = ["scenario", "L_km", "n", "m", "P0", "mean_time_s", "rate_per_s",
                  "C_R", "F_elem", "F_swap", "F_tot", "storage_policy",
                  "crossover_km"]


def _report_rows(scenarios, reports) -> list[list[Any]]:
    rows = []
    for sc, rep in zip(scenarios, reports):
        rows.append([sc.name, rep.length_km, rep.nesting_level, rep.multiplexing,
                     rep.p0, rep.mean_time_s, rep.rate_per_s,
                     rep.residual_coherence, rep.elementary_fidelity,
                     rep.swap_fidelity, rep.final_fidelity, rep.storage_policy,
                     rep.crossover_km if rep.crossover_km is not None else ""])
    return rows


def cmd_rates(config: RunConfig, args) -> _Report:
    if getattr(args, "figure6", False):
        return cmd_figure6(config, args)
    report = _Report("rates", config)
    ra = config["rates"]
    lengths = np.linspace(ra["length_min_km"], ra["length_max_km"],
                          ra["length_steps"])
    scenarios = _chain_scenarios(config)
    budgets: dict[float, sn.OperationBudget] = {}
    all_rows = []
    for sc in scenarios:
        per_length = [replace(sc, length_km=float(L)) for L in lengths]
        reports = sn.scenario_table(per_length, budgets=budgets,
                                    drive_method=config.get("chain", "drive_method"))
        all_rows.extend(_report_rows(per_length, reports))
    report.add_table("rates", _REPORT_HEADER, all_rows)
    report.summary["scenarios"] = [sc.name for sc in scenarios]
    report.summary["lengths_km"] = [float(lengths[0]), float(lengths[-1])]
    return report


def cmd_crossover(config: RunConfig, args) -> _Report:
    report = _Report("crossover", config)
    scenarios = _chain_scenarios(config)
    budgets: dict[float, sn.OperationBudget] = {}
    reports = sn.scenario_table(scenarios, budgets=budgets,
                                drive_method=config.get("chain", "drive_method"))
    report.add_table("crossover", _REPORT_HEADER, _report_rows(scenarios, reports))
    report.summary["crossover_km"] = {sc.name: rep.crossover_km
                                      for sc, rep in zip(scenarios, reports)}
    report.summary["final_fidelity"] = {sc.name: rep.final_fidelity
                                        for sc, rep in zip(scenarios, reports)}
    return report


def cmd_mc(config: RunConfig, args) -> _Report:
    report = _Report("mc", config)
    sec = config["mc"]
    trials = args.trials if args.trials is not None else sec["trials"]
    seed = args.seed if args.seed is not None else sec["seed"]
    ch, li = config["chain"], config["link"]
    t_o = 1e-4 if li["operation_time_s"] == "auto" else float(li["operation_time_s"])
    rows = []
    for n in range(ch["nesting_level"] + 1):
        link = LinkParams(length_km=50.0, attenuation_km=li["attenuation_km"],
                          emission_probability=li["emission_probability"],
                          detection_efficiency=li["detection_efficiency"],
                          operation_time_s=t_o)
        chain = ChainParams(nesting_level=n, swap_probability=ch["swap_probability"])
        mean, stderr = monte_carlo_time(chain, link, trials=int(trials),
                                        seed=int(seed))
        formula = mean_time(chain, link)
        rows.append([n, mean, stderr, formula, formula / mean])
    report.add_table("mc", ["n", "mc_mean_s", "mc_stderr_s", "formula_s",
                            "formula_over_mc"], rows)
    report.summary["trials"] = int(trials)
    report.summary["seed"] = int(seed)
    report.summary["formula_over_mc"] = {r[0]: r[4] for r in rows}
    return report


def cmd_figure6(config: RunConfig, args) -> _Report:
    report = _Report("figure6", config)
    ra, ch = config["rates"], config["chain"]
    lengths = np.linspace(ra["length_min_km"], ra["length_max_km"],
                          ra["length_steps"])
    curves = sn.figure_rate_curves(lengths, loss_ratio=ch["loss_ratio"],
                                   nesting_level=ch["nesting_level"],
                                   drive_method=ch["drive_method"])
    names = ["L_km", "direct_1GHz", "cat_m200", "re_m200", "dlcz_m200",
             "cat_m1", "re_m1", "dlcz_m1"]
    rows = [[curves[name][i] for name in names] for i in range(len(lengths))]
    report.add_table("figure6", names, rows)
    report.summary["curves"] = names[1:]
    return report


COMMANDS = {
    "gates": cmd_gates,
    "grape": cmd_grape,
    "device": cmd_device,
    "transduce": cmd_transduce,
    "rates": cmd_rates,
    "crossover": cmd_crossover,
    "mc": cmd_mc,
    "figure6": cmd_figure6,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catlink",
        description="Kerr-cat repeater toolkit: gate tables, GRAPE pulses, device "
                    "estimation, transduction efficiency, rates and crossovers.")
    parser.add_argument("--version", action="version", version=f"catlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help=f"config file path (default: ${CONFIG_ENV_VAR} if set)")
        p.add_argument("--out", default=None, help="output directory root")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--trials", type=int, default=None,
                       help="override Monte-Carlo trials")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="primary table format")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a single config key")
        if name == "grape":
            p.add_argument("--iters", type=int, default=None,
                           help="override GRAPE iteration cap")
        if name == "rates":
            p.add_argument("--figure6", action="store_true",
                           help="emit the seven-curve comparison dataset instead")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        path = args.config or os.environ.get(CONFIG_ENV_VAR) or None
        config = load_config(path)
        overrides: dict[tuple[str, str], str] = {}
        for item in args.set:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
            target, raw = item.split("=", 1)
            section, key = target.split(".", 1)
            overrides[(section.strip(), key.strip())] = raw.strip()
        if args.format:
            overrides[("output", "format")] = args.format
        if overrides:
            config = config.with_overrides(overrides)
        report = COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_root = args.out or config.get("output", "directory")
    out_dir = report.write(out_root, config.get("output", "format"))
    summary = {k: v for k, v in report.summary.items() if k != "resolved_config"}
    print(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    print(f"wrote {out_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
