"""Command-line driver: seeded experiment runs and analysis reports.

``pqelab run --config cfg.json`` executes the configured experiment and
writes a manifest plus convergence-trace artifacts (CSV and a JSON mirror)
into the output directory.  ``pqelab report {cost,stability,fci} --config
cfg.json`` derives analysis tables from the same configuration without
touching run artifacts.

Runs are deterministic for a given configuration and seed: re-running
produces byte-identical artifacts except for the manifest timestamp.
Non-convergence is reported in the trace status, never via the exit code;
a nonzero exit means the run itself failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .adpqe import (
    ADResult,
    PartitionPlan,
    feedback_adpqe_solve,
    nfc_solve,
    partition_and_order,
    stability_spectrum,
)
from .config import ConfigError, ExperimentConfig, load_config
from .fcidump import read_fcidump_file
from .hamiltonian import (
    OrbitalEnergies,
    SpinOrbitalHamiltonian,
    build_hubbard_chain,
    compute_fock,
    hartree_fock_energy,
    spatial_to_spin_orbital,
)
from .noise import (
    NoiseModel,
    ProtocolConfig,
    ZneConfig,
    count_gates,
    fault_report,
    measurement_budget,
    noisy_protocol_run,
)
from .operators import excitation_pool, hamiltonian_to_pauli
from .oracle import fci_ground_energy
from .pqe import PqeConfig, PqeResult, initialize_parameters, pqe_solve
from .statevector import OrderedAnsatz

__all__ = ["main"]

TRACE_COLUMNS = ("iteration", "energy", "residue_inf_norm", "cumulative_residue_evals")


# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(value: Any) -> str:
    """Deterministic text form: shortest round-trip repr for floats."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(
        json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )


def _table_text(header: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str) -> str:
    if fmt == "json":
        payload = [dict(zip(header, (_jsonable(c) for c in row))) for row in rows]
        return json.dumps(payload, indent=2) + "\n"
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# system assembly


def _resolve_path(raw: str, config_path: Path | None) -> Path:
    path = Path(raw)
    if path.exists() or config_path is None:
        return path
    candidate = config_path.parent / raw
    return candidate if candidate.exists() else path


def _load_systems(
    config: ExperimentConfig, config_path: Path | None
) -> list[tuple[str, SpinOrbitalHamiltonian, OrbitalEnergies]]:
    systems: list[tuple[str, SpinOrbitalHamiltonian, OrbitalEnergies]] = []
    if config.system.hubbard is not None:
        hub = config.system.hubbard
        h, eps = build_hubbard_chain(hub.sites, hub.t, hub.u, hub.nelec)
        systems.append((f"hubbard_{hub.sites}site", h, eps))
        return systems
    seen: dict[str, int] = {}
    for raw in config.system.fcidump_paths:
        path = _resolve_path(raw, config_path)
        if not path.exists():
            raise ConfigError(f"system.fcidump: no such file: {raw}")
        integrals = read_fcidump_file(path)
        h = spatial_to_spin_orbital(integrals)
        label = path.stem
        if label in seen:
            seen[label] += 1
            label = f"{label}_{seen[label]}"
        else:
            seen[label] = 0
        systems.append((label, h, compute_fock(h)))
    return systems


def _prepare(h: SpinOrbitalHamiltonian, eps: OrbitalEnergies):
    pool = excitation_pool(h)
    h_pauli = hamiltonian_to_pauli(h)
    init = initialize_parameters(h, eps, pool, h_pauli)
    return pool, h_pauli, init


def _make_plan(
    h: SpinOrbitalHamiltonian, pool, init: np.ndarray, config: ExperimentConfig
) -> PartitionPlan:
    return partition_and_order(pool, init, config.effective_f_pps, h.n_so)


# ---------------------------------------------------------------------------
# noiseless runs


def _solve_noiseless(
    h: SpinOrbitalHamiltonian,
    eps: OrbitalEnergies,
    config: ExperimentConfig,
) -> tuple[PqeResult | ADResult, PartitionPlan | None]:
    pool, h_pauli, init = _prepare(h, eps)
    solver_config = PqeConfig(
        max_iterations=config.max_iterations,
        residue_tolerance=config.residue_tolerance,
    )
    if config.solver == "pqe":
        if config.f_pps is None:
            ansatz = OrderedAnsatz(h.n_so, tuple(pool))
            params0 = np.array(init, dtype=float)
            plan = None
        else:
            plan = _make_plan(h, pool, init, config)
            order = plan.principal_slots + plan.auxiliary_slots
            ansatz = OrderedAnsatz(h.n_so, tuple(pool[s] for s in order))
            params0 = init[list(order)]
        result = pqe_solve(h_pauli, ansatz, params0, eps, h.occupation, solver_config)
        return result, plan
    plan = _make_plan(h, pool, init, config)
    solve = nfc_solve if config.solver == "nfc-adpqe" else feedback_adpqe_solve
    result = solve(h_pauli, plan, init, eps, h.occupation, solver_config)
    return result, plan


def _trace_rows(result: PqeResult | ADResult) -> list[tuple[int, float, float, int]]:
    return [
        (r.iteration, r.energy, r.residue_inf_norm, r.cumulative_residue_evals)
        for r in result.trace.records
    ]


def _trace_records_json(result: PqeResult | ADResult) -> list[dict[str, Any]]:
    return [
        {
            "iteration": r.iteration,
            "energy": r.energy,
            "residue_inf_norm": r.residue_inf_norm,
            "cumulative_residue_evals": r.cumulative_residue_evals,
            "kind": r.kind,
        }
        for r in result.trace.records
    ]


def _result_summary(
    label: str, result: PqeResult | ADResult, plan: PartitionPlan | None
) -> dict[str, Any]:
    iterations = sum(1 for r in result.trace.records if r.kind == "iteration")
    summary: dict[str, Any] = {
        "system": label,
        "final_energy": result.energy,
        "status": result.trace.status,
        "iterations": iterations,
    }
    if isinstance(result, ADResult):
        summary.update(
            principal_energy=result.e_principal,
            correction=result.correction,
            corrected_energy=result.e_corrected,
        )
    if plan is not None:
        summary.update(n_principal=plan.n_principal, n_auxiliary=plan.n_auxiliary)
    return summary


def _run_noiseless(
    systems, config: ExperimentConfig, out_dir: Path
) -> tuple[list[str], list[dict[str, Any]]]:
    artifacts: list[str] = []
    summaries: list[dict[str, Any]] = []
    sweep = len(systems) > 1
    for label, h, eps in systems:
        result, plan = _solve_noiseless(h, eps, config)
        stem = f"trace_{label}" if sweep else "trace"
        _write_csv(out_dir / f"{stem}.csv", TRACE_COLUMNS, _trace_rows(result))
        _write_json(
            out_dir / f"{stem}.json",
            {"system": label, "status": result.trace.status,
             "records": _trace_records_json(result)},
        )
        artifacts.extend([f"{stem}.csv", f"{stem}.json"])
        summaries.append(_result_summary(label, result, plan))
    if sweep:
        header = ["system", "final_energy", "status", "iterations"]
        rows = [[s[k] for k in header] for s in summaries]
        _write_csv(out_dir / "sweep.csv", header, rows)
        _write_json(out_dir / "sweep.json", summaries)
        artifacts.extend(["sweep.csv", "sweep.json"])
    return artifacts, summaries


# ---------------------------------------------------------------------------
# noisy protocol runs


def _run_noisy(
    systems, config: ExperimentConfig, out_dir: Path
) -> tuple[list[str], list[dict[str, Any]]]:
    label, h, eps = systems[0]
    pool, h_pauli, init = _prepare(h, eps)
    plan = _make_plan(h, pool, init, config)
    nm = NoiseModel(
        p1=config.noise.p1,
        p2=config.noise.p2,
        shots=config.noise.shots,
        trajectories=config.noise.trajectories,
    )
    zne = ZneConfig(scale_factors=config.zne.scale_factors, order=config.zne.order)
    protocol = ProtocolConfig(
        terminate_at=config.protocol.terminate_at,
        average_last=config.protocol.average_last,
        repeats=config.protocol.repeats,
    )
    aggregate = noisy_protocol_run(
        h_pauli, plan, config.solver, nm, zne, protocol,
        eps, h.occupation, init, config.protocol.seed,
    )
    agg_rows = [
        (k, aggregate.per_iteration_mean[k], aggregate.per_iteration_std[k])
        for k in range(len(aggregate.per_iteration_mean))
    ]
    _write_csv(out_dir / "aggregate.csv",
               ("iteration", "mean_energy", "std_energy"), agg_rows)
    run_rows = [
        (idx, k, run.energies[k])
        for idx, run in enumerate(aggregate.runs)
        for k in range(len(run.energies))
    ]
    _write_csv(out_dir / "runs.csv", ("run", "iteration", "energy"), run_rows)
    runs_json = [
        {
            "run": idx,
            "energies": run.energies,
            "final_energy": run.final_energy,
            "post_mapping_change": run.post_mapping_change,
        }
        for idx, run in enumerate(aggregate.runs)
    ]
    _write_json(
        out_dir / "aggregate.json",
        {
            "system": label,
            "per_iteration_mean": aggregate.per_iteration_mean,
            "per_iteration_std": aggregate.per_iteration_std,
            "final_energies": aggregate.final_energies,
            "final_mean": aggregate.final_mean,
            "final_std": aggregate.final_std,
        },
    )
    _write_json(out_dir / "runs.json", runs_json)
    summary = {
        "system": label,
        "final_mean": aggregate.final_mean,
        "final_std": aggregate.final_std,
        "post_mapping_changes": [r.post_mapping_change for r in aggregate.runs],
        "n_principal": plan.n_principal,
        "n_auxiliary": plan.n_auxiliary,
    }
    artifacts = ["aggregate.csv", "aggregate.json", "runs.csv", "runs.json"]
    return artifacts, [summary]


# ---------------------------------------------------------------------------
# subcommands


def _cmd_run(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = load_config(config_path).with_overrides(
        out=args.out, fmt=args.format, seed=args.seed
    )
    systems = _load_systems(config, config_path)
    out_dir = Path(config.output.path)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.noise.enabled:
        artifacts, summaries = _run_noisy(systems, config, out_dir)
    else:
        artifacts, summaries = _run_noiseless(systems, config, out_dir)
    manifest = {
        "tool": "pqelab",
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": config.resolved(),
        "seed": config.protocol.seed,
        "artifacts": artifacts,
        "results": summaries,
    }
    _write_json(out_dir / "manifest.json", manifest)
    print(f"wrote {len(artifacts) + 1} artifacts to {out_dir}")
    for summary in summaries:
        energy = summary.get("final_energy", summary.get("final_mean"))
        print(f"  {summary['system']}: energy {_fmt(energy)}")
    return 0


def _report_cost(config: ExperimentConfig, systems) -> tuple[list[str], list[list[Any]]]:
    header = [
        "system", "n_parameters", "n_principal", "n_auxiliary",
        "cnot_full", "cnot_principal", "one_qubit_full", "one_qubit_principal",
        "residue_evals_bound_full", "residue_evals_bound_principal",
        "measurement_ratio", "fault_rate_full", "fault_rate_principal",
        "fault_free_product_full", "fault_free_product_principal",
        "zne_error_factor",
    ]
    nm = NoiseModel(p1=config.noise.p1, p2=config.noise.p2,
                    shots=config.noise.shots, trajectories=config.noise.trajectories)
    n_points = (config.zne.order if config.zne.order is not None
                else len(config.zne.scale_factors) - 1)
    f_pps = config.effective_f_pps
    rows = []
    for label, h, eps in systems:
        pool, h_pauli, init = _prepare(h, eps)
        plan = partition_and_order(pool, init, f_pps, h.n_so)
        full_counts = count_gates(tuple(pool))
        principal_counts = count_gates(plan.principal_excitations)
        weight = float(sum(abs(coeff) for _, coeff in h_pauli.items()))
        budget = measurement_budget(
            len(pool), weight, config.residue_tolerance, f_pps
        )
        full_report = fault_report(full_counts, nm)
        principal_report = fault_report(principal_counts, nm)
        rows.append([
            label, len(pool), plan.n_principal, plan.n_auxiliary,
            full_counts.n_cnot, principal_counts.n_cnot,
            full_counts.n_single_qubit, principal_counts.n_single_qubit,
            budget.full_bound, budget.principal_bound, budget.ratio,
            full_report.fault_rate, principal_report.fault_rate,
            full_report.fault_free_product, principal_report.fault_free_product,
            f_pps ** (n_points + 1),
        ])
    return header, rows


def _report_stability(
    config: ExperimentConfig, systems
) -> tuple[list[str], list[list[Any]]]:
    header = ["system", "index", "modulus", "spectral_radius", "status"]
    rows = []
    for label, h, eps in systems:
        result, plan = _solve_noiseless(h, eps, config)
        pool, h_pauli, _ = _prepare(h, eps)
        if isinstance(result, ADResult):
            if config.solver == "feedback-adpqe" and plan.n_auxiliary:
                ansatz = plan.bipartite_ansatz()
                params = np.concatenate(
                    [result.principal_params, result.auxiliary_params]
                )
            else:
                ansatz = plan.principal_ansatz()
                params = result.principal_params
        else:
            if plan is None:
                ansatz = OrderedAnsatz(h.n_so, tuple(pool))
            else:
                order = plan.principal_slots + plan.auxiliary_slots
                ansatz = OrderedAnsatz(h.n_so, tuple(pool[s] for s in order))
            params = result.params
        spectrum = stability_spectrum(h_pauli, ansatz, params, eps, h.occupation)
        status = result.trace.status
        for index, modulus in enumerate(spectrum.moduli):
            rows.append([label, index, modulus, spectrum.spectral_radius, status])
    return header, rows


def _report_fci(config: ExperimentConfig, systems) -> tuple[list[str], list[list[Any]]]:
    header = ["system", "n_spin_orbitals", "n_electrons",
              "hartree_fock_energy", "fci_energy"]
    rows = []
    for label, h, eps in systems:
        rows.append([
            label, h.n_so, len(h.occupation),
            hartree_fock_energy(h), fci_ground_energy(h),
        ])
    return header, rows


def _cmd_report(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = load_config(config_path).with_overrides(
        out=None, fmt=args.format, seed=args.seed
    )
    systems = _load_systems(config, config_path)
    builders = {
        "cost": _report_cost,
        "stability": _report_stability,
        "fci": _report_fci,
    }
    header, rows = builders[args.kind](config, systems)
    text = _table_text(header, rows, config.output.format)
    if args.out:
        out_path = Path(args.out)
        if out_path.parent != Path(""):
            out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text, encoding="utf-8")
        print(f"wrote {args.kind} report to {out_path}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqelab",
        description="Projective quantum eigensolver laboratory: seeded "
        "experiment runs, noise-mitigated protocols, and analysis reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", default=None, help="output directory or report file")
        p.add_argument("--format", default=None, choices=["csv", "json"],
                       help="tabular output format (overrides config)")
        p.add_argument("--seed", default=None, type=int,
                       help="base seed (overrides config)")

    run = sub.add_parser("run", help="execute the configured experiment")
    add_common(run)

    report = sub.add_parser("report", help="derive an analysis table")
    report.add_argument("kind", choices=["cost", "stability", "fci"],
                        help="which table to build")
    add_common(report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_report(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
