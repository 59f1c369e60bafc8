"""Command line front end for the release pipeline.

Subcommands cover the full life of a workload: release draws private
tables from a dataset, predict-error reports closed-form noise levels
without touching any data, optimize-weights solves for the
max-variance weights, verify builds the dense factorization and checks
its optimality certificates, lower-bound prints the trace-norm bound
next to the achieved error, and plot-data emits the CSV tables behind
the accuracy figures.

Every command is deterministic given its flags; releases require an
explicit --seed and nothing reads ambient entropy.  The only
environment variable consulted is FOURIER_MARGINALS_LOG, which sets
the log level.

Exit codes: 0 success, 2 unusable flags or input files, 3 a requested
set cannot be estimated, 4 the weight optimizer did not converge,
5 a certificate check failed.
"""

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import budget, core, factorization, mechanism, optimizer

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNESTIMABLE = 3
EXIT_NO_CONVERGENCE = 4
EXIT_CERTIFICATE = 5

log = logging.getLogger("fourier_marginals.cli")


class ConfigError(core.FourierMarginalsError):
    """Flags or input files that cannot be used."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """One parsed invocation, validated before any work starts."""

    command: str
    dataset: str = None
    workload: str = None
    mu: float = 1.0
    seed: int = None
    objective: str = "weighted-rms"
    out: str = None
    fmt: str = "json"
    dense_cap: int = None
    tol: float = 1e-8
    corrupt_scale: float = 1.0
    table: str = None
    m_values: tuple = ()
    k_values: tuple = ()
    d_max: int = 30
    m_max: int = 10000

    def validated(self):
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if self.command == "release" and self.seed is None:
            raise ConfigError("release draws noise and needs --seed")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.dense_cap is not None and self.dense_cap < 1:
            raise ConfigError(f"dense cap must be at least 1, got "
                              f"{self.dense_cap}")
        if self.command == "plot-data":
            if self.fmt != "csv":
                raise ConfigError("plot-data only emits CSV")
        elif self.fmt == "csv" and self.command != "release":
            raise ConfigError(f"{self.command} only emits JSON")
        return self


def _int_list(text):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fourier-marginals",
        description="Differentially private releases of weighted marginal "
                    "and range workloads, with optimality certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out", help="output path (default: stdout)")

    work = argparse.ArgumentParser(add_help=False)
    work.add_argument("--workload", required=True,
                      help="workload description, JSON")

    p = sub.add_parser("release", parents=[work, output],
                       help="draw a private release of a workload")
    p.add_argument("--dataset", required=True, help="dataset rows, CSV")
    p.add_argument("--mu", type=float, default=1.0,
                   help="privacy level (default 1.0)")
    p.add_argument("--seed", type=int, help="noise seed, required")
    p.add_argument("--objective", choices=["weighted-rms", "max-variance"],
                   default="weighted-rms",
                   help="weights as given, or solved to equalize variances")
    p.add_argument("--format", dest="fmt", choices=["json", "csv"],
                   default="json")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="optimizer tolerance for max-variance")

    p = sub.add_parser("predict-error", parents=[work, output],
                       help="closed-form error report, no dataset needed")
    p.add_argument("--mu", type=float, default=1.0)

    p = sub.add_parser("optimize-weights", parents=[work, output],
                       help="solve for the max-variance optimal weights")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("verify", parents=[work, output],
                       help="check the factorization certificates")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="largest residual accepted as a pass")
    p.add_argument("--objective", choices=["weighted-rms", "max-variance"],
                   default="weighted-rms",
                   help="max-variance also certifies the row norms at "
                        "the solved weights")
    p.add_argument("--dense-cap", dest="dense_cap", type=int,
                   help="override the dense universe cap")
    p.add_argument("--corrupt-scale", dest="corrupt_scale", type=float,
                   default=1.0,
                   help="mis-scale one normalization entry; the "
                        "certificates must then fail (testing aid)")

    p = sub.add_parser("lower-bound", parents=[work, output],
                       help="trace-norm lower bound next to the achieved "
                            "error")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--dense-cap", dest="dense_cap", type=int)

    p = sub.add_parser("plot-data", parents=[output],
                       help="CSV tables for the accuracy figures")
    p.add_argument("--table", choices=["ratio", "eta-zeta"], required=True)
    p.add_argument("--m", dest="m_values", type=_int_list,
                   default=tuple(range(2, 11)),
                   help="domain sizes for the ratio table (comma list)")
    p.add_argument("--k", dest="k_values", type=_int_list,
                   default=(1, 2, 3),
                   help="marginal arities for the ratio table (comma list)")
    p.add_argument("--d-max", dest="d_max", type=int, default=30,
                   help="largest dimension for the ratio table")
    p.add_argument("--m-max", dest="m_max", type=int, default=10000,
                   help="largest domain size for the eta-zeta table")
    return parser


def _config_from_args(args):
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values = {name: value for name, value in vars(args).items()
              if name in fields and value is not None}
    if args.command == "plot-data":
        values.setdefault("fmt", "csv")
    return RunConfig(**values)


def _setup_logging():
    level = os.environ.get("FOURIER_MARGINALS_LOG", "")
    if level:
        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.INFO))


def _plain(value):
    """JSON-ready copy: numpy scalars and containers become plain Python."""
    if isinstance(value, dict):
        return {key: _plain(inner) for key, inner in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(inner) for inner in value]
    if isinstance(value, np.ndarray):
        return [_plain(inner) for inner in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def _json_text(doc):
    return json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        # newline="" so csv row terminators survive byte-for-byte
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _load_workload(path):
    try:
        return core.read_workload_json(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError,
            ValueError) as exc:
        raise ConfigError(f"cannot read workload {path!r}: {exc}")


def _load_dataset(path, universe, names):
    try:
        return core.read_dataset_csv(path, universe, names)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path!r}: {exc}")


def _weight_rows(solution, names):
    return [{"attrs": [names[j] for j in members], "p": float(value)}
            for members, value in zip(solution.sets, solution.p_star)]


def cmd_release(config):
    universe, workload, names = _load_workload(config.workload)
    dataset, value_maps = _load_dataset(config.dataset, universe, names)
    log.debug("release: %d rows, %d sets, kind %s", dataset.n,
              len(workload.sets), workload.kind)
    solution = None
    p = None
    if config.objective == "max-variance":
        solution = optimizer.optimize_pstar(workload, tol=config.tol)
        p = solution.p_star
    sampler = budget.SeededSampler(config.seed)
    if workload.kind == "product":
        result = mechanism.release_product(dataset, workload, p=p,
                                           mu=config.mu, sampler=sampler)
    elif workload.kind == "extended":
        result = mechanism.release_extended(dataset, workload, p=p,
                                            mu=config.mu, sampler=sampler)
    else:
        result = mechanism.release_marginals(dataset, workload, p=p,
                                             mu=config.mu, sampler=sampler)
    doc = mechanism.release_document(result, names=names)
    doc["meta"]["objective"] = config.objective
    doc["meta"]["value_maps"] = value_maps
    if solution is not None:
        doc["weights"] = _weight_rows(solution, names)
    if config.fmt == "csv":
        _emit(_release_csv(doc), config.out)
    else:
        _emit(_json_text(doc), config.out)
    return EXIT_OK


def _release_csv(doc):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["attrs", "t", "sigma", "estimate"])
    for entry in doc["sets"]:
        attrs = "|".join(str(a) for a in entry["attrs"])
        sigma = repr(float(entry["sigma"]))
        for row in entry["table"]:
            target = "|".join(str(v) for v in row["t"])
            writer.writerow([attrs, target, sigma,
                             repr(float(row["estimate"]))])
    return buf.getvalue()


def cmd_predict_error(config):
    universe, workload, names = _load_workload(config.workload)
    predicted = mechanism.predicted_error(workload, mu=config.mu)
    baseline = mechanism.gaussian_baseline_sigma(len(workload.sets),
                                                 config.mu)
    doc = {
        "kind": workload.kind,
        "mu": config.mu,
        "per_set": [{"attrs": [names[j] for j in members],
                     "sigma": predicted["per_set_sigma"][members]}
                    for members in workload.sets],
        "weighted_rms": predicted["weighted_rms"],
        "max_sigma": predicted["max_sigma"],
        "baseline_sigma": baseline,
        "improvement_ratio": predicted["weighted_rms"] / baseline,
    }
    _emit(_json_text(doc), config.out)
    return EXIT_OK


def cmd_optimize_weights(config):
    universe, workload, names = _load_workload(config.workload)
    solution = optimizer.optimize_pstar(workload, tol=config.tol)
    doc = {
        "kind": workload.kind,
        "sets": _weight_rows(solution, names),
        "objective": solution.objective,
        "kkt_residual": solution.kkt_residual,
        "iterations": solution.iterations,
    }
    _emit(_json_text(doc), config.out)
    return EXIT_OK


def cmd_verify(config):
    universe, workload, names = _load_workload(config.workload)
    tol = config.tol
    solution = None
    p = None
    if config.objective == "max-variance":
        solution = optimizer.optimize_pstar(workload, tol=min(tol, 1e-8))
        p = solution.p_star
    fact = factorization.build_factorization(workload, p=p,
                                             dense_cap=config.dense_cap)
    if config.corrupt_scale != 1.0:
        E = fact.E.copy()
        E[int(np.argmax(E))] *= config.corrupt_scale
        fact = dataclasses.replace(fact, E=E)
    report = factorization.norm_report(fact)
    residuals = factorization.tightness_certificate(fact)
    scale = max(report.svd_lower_bound, 1e-300)
    checks = [
        ("factor_product", residuals["lpl"], tol),
        ("right_gram", residuals["rr"], tol),
        ("column_norms", residuals["colnorm"], tol),
        ("trace_bound_gap",
         abs(report.gammaF_value - report.svd_lower_bound) / scale, tol),
    ]
    if solution is not None:
        # weights are solved to tol, so the max-sigma gap is looser
        checks.append(("row_norms", residuals["rownorm"], tol))
        checks.append(("minimax_gap",
                       abs(report.gamma2_value - report.svd_lower_bound)
                       / scale, max(tol, 1e-7)))
    doc = {
        "kind": workload.kind,
        "objective": config.objective,
        "tolerance": tol,
        "gammaF": report.gammaF_value,
        "gamma2": report.gamma2_value,
        "svd_lower": report.svd_lower_bound,
        "residuals": residuals,
    }
    if solution is not None:
        doc["weights"] = _weight_rows(solution, names)
    if workload.kind == "extended":
        witness = factorization.lower_bound_witness(
            workload, p=p, dense_cap=config.dense_cap)
        gap = abs(witness.trace_value - witness.closed_form) \
            / max(1.0, witness.closed_form)
        checks.append(("range_trace_gap", gap, max(tol, 1e-8)))
        checks.append(("range_op_norm_excess",
                       max(0.0, witness.op_norm - 1.0), max(tol, 1e-9)))
        doc["range_bound"] = {
            "closed_form": witness.closed_form,
            "trace_value": witness.trace_value,
            "op_norm": witness.op_norm,
            "note": witness.note,
        }
    doc["checks"] = [{"name": name, "value": value, "limit": limit,
                      "pass": value <= limit}
                     for name, value, limit in checks]
    ok = all(entry["pass"] for entry in doc["checks"])
    doc["pass"] = ok
    _emit(_json_text(doc), config.out)
    return EXIT_OK if ok else EXIT_CERTIFICATE


def cmd_lower_bound(config):
    universe, workload, names = _load_workload(config.workload)
    upper = mechanism.predicted_error(workload, mu=config.mu)["weighted_rms"]
    doc = {"kind": workload.kind, "mu": config.mu, "upper_bound": upper}
    if workload.kind == "extended":
        value = factorization.extended_lower_bound(
            workload, dense_cap=config.dense_cap)
        if core.NUMERICAL in universe.attribute_kind:
            doc["note"] = factorization.WITNESS_NOTE
        # the witness lives over the original universe
        cap = config.dense_cap or factorization.DENSE_UNIVERSE_CAP
        rows = sum(universe.subuniverse_size(members)
                   for members in workload.sets)
        doc["dense_witness"] = (universe.size <= cap
                                and rows <= factorization.DENSE_QUERY_CAP)
    else:
        try:
            value = factorization.svd_lower_bound(
                workload, dense_cap=config.dense_cap)
            doc["dense_witness"] = True
        except factorization.DenseTooLarge:
            value = factorization.certificate_document(
                workload, dense_cap=config.dense_cap)["gammaF"]
            doc["dense_witness"] = False
    doc["lower_bound"] = value / config.mu
    doc["ratio"] = doc["lower_bound"] / upper if upper > 0 else None
    _emit(_json_text(doc), config.out)
    return EXIT_OK


def cmd_plot_data(config):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if config.table == "ratio":
        writer.writerow(["d", "k", "m", "ratio"])
        for m in config.m_values:
            for k in config.k_values:
                for d in range(k, config.d_max + 1):
                    sigma = mechanism.k_way_sigma(d, k, m, mu=1.0)
                    baseline = mechanism.gaussian_baseline_sigma(
                        math.comb(d, k), 1.0)
                    writer.writerow([d, k, m, repr(sigma / baseline)])
    else:
        writer.writerow(["m", "eta", "zeta", "difference"])
        for m in range(2, config.m_max + 1):
            high = mechanism.eta(m)
            low = mechanism.zeta(m)
            writer.writerow([m, repr(high), repr(low), repr(high - low)])
    _emit(buf.getvalue(), config.out)
    return EXIT_OK


COMMANDS = {
    "release": cmd_release,
    "predict-error": cmd_predict_error,
    "optimize-weights": cmd_optimize_weights,
    "verify": cmd_verify,
    "lower-bound": cmd_lower_bound,
    "plot-data": cmd_plot_data,
}


def main(argv=None):
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _config_from_args(args).validated()
        return COMMANDS[config.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except core.Unestimable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNESTIMABLE
    except optimizer.NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except core.FourierMarginalsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
