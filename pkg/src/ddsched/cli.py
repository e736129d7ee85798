"""Command-line front end.

Exit codes: 0 ok, 1 acceptance failure, 2 config error, 3 I/O error,
4 degenerate data, 5 dimension mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import _kernels, broadcast, experiments, files, learning, unicast
from .model import (
    BroadcastPolicy,
    CcpOptions,
    DegenerateVarianceError,
    DimensionMismatchError,
    EmptyDataError,
    NonFiniteError,
    TooFewSensorsError,
    UnicastPolicy,
)
from .sampler import Empirical, MonteCarloMixture, empirical_moments, analytic_moments, reference_mixture, sample_mixture

log = logging.getLogger("ddsched")

EXIT_OK, EXIT_ACCEPT, EXIT_CONFIG, EXIT_IO, EXIT_DATA, EXIT_DIM = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def artifact_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


class Run:
    """Collects the resolved config and phase timings for the manifest."""

    def __init__(self, command: str, args, config: dict):
        self.command = command
        self.seed = args.seed
        self.config = config
        self.with_timings = not args.no_timings
        self.timings: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        yield
        self.timings[name] = time.perf_counter() - t0

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "config_digest": files.digest(self.config),
            "seed": self.seed,
            "artifact_version": artifact_version(),
            "timings": self.timings if self.with_timings else {},
        }

    def report(self, body: dict) -> dict:
        return {"schema_version": files.SCHEMA_VERSION, **body, "config": self.config, "manifest": self.manifest()}


def _opts(args) -> CcpOptions:
    try:
        return CcpOptions(args.max_iter, args.tol, args.objective_tol)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def _load_data(path):
    try:
        return files.read_dataset(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    except files.DataFormatError as exc:
        raise CliError(EXIT_IO, str(exc)) from None


def _load_mixture(path):
    if path == "reference":
        return reference_mixture()
    try:
        return files.read_mixture(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None


def _load_policy(path, mode=None):
    try:
        d = files.read_json(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    policy = files.policy_from_dict(d)
    kind = "unicast" if isinstance(policy, UnicastPolicy) else "broadcast"
    if mode is not None and mode != kind:
        raise CliError(EXIT_CONFIG, f"--mode {mode} but {path} holds a {kind} policy")
    return policy, d


def _objective(policy, backend) -> float:
    if isinstance(policy, BroadcastPolicy):
        return broadcast.broadcast_objective(policy, backend)
    return unicast.unicast_objective(policy, backend)


def _frequencies(policy, backend) -> list[float]:
    mod = broadcast if isinstance(policy, BroadcastPolicy) else unicast
    return [float(v) for v in mod.schedule_frequencies(policy, backend)]


def _write(obj, path: str | None) -> None:
    text = files.dumps(obj)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def cmd_generate(args) -> int:
    if args.count < 1:
        raise CliError(EXIT_CONFIG, "--count must be positive")
    if not args.out:
        raise CliError(EXIT_CONFIG, "--out is required")
    spec = _load_mixture(args.mixture)
    data = sample_mixture(spec, args.count, args.seed)
    try:
        files.write_dataset(data, args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {exc}") from None
    means = " ".join(f"{m:.6f}" for m in data.data.mean(axis=0))
    print(f"wrote {data.n_samples} rows to {args.out}; empirical means {means}")
    return EXIT_OK


def cmd_train(args) -> int:
    data = _load_data(args.data)
    config = {
        "mode": args.mode, "data": str(args.data), "n_samples": data.n_samples, "restarts": args.restarts,
        "seed": args.seed, "max_iter": args.max_iter, "tol": args.tol, "objective_tol": args.objective_tol,
    }
    run = Run("train", args, config)
    cfg = learning.LearningConfig(mode=args.mode, restarts=args.restarts, ccp_options=_opts(args), seed=args.seed)
    with run.phase("train"):
        policy, j_train, traces = learning.train(data, cfg, with_traces=True)
    finals = [t.objective_values[-1] for t in traces]
    body = {
        "policy": files.policy_to_dict(policy),
        "j_train": j_train,
        "restarts": args.restarts,
        "trace_summary": {
            "converged": sum(t.converged for t in traces),
            "mean_iterations": float(np.mean([t.iterations for t in traces])),
            "best": traces[int(np.argmin(finals))].summary(),
            "distinct_final_objectives": len({round(v, 10) for v in finals}),
        },
    }
    _write(run.report(body), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    policy, _ = _load_policy(args.policy, args.mode)
    data = _load_data(args.data)
    if data.n_sensors != policy.n:
        raise CliError(EXIT_DIM, f"policy has n={policy.n}, data has n={data.n_sensors}")
    backend = Empirical(data)
    run = Run("evaluate", args, {"policy": str(args.policy), "data": str(args.data)})
    with run.phase("evaluate"):
        value = _objective(policy, backend)
        freq = _frequencies(policy, backend)
    print(f"objective {value:.10g}")
    print("schedule frequencies " + " ".join(f"{f:.6f}" for f in freq))
    if args.out:
        _write(run.report({"objective": value, "schedule_frequencies": freq, "n_samples": data.n_samples}), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    policy, raw = _load_policy(args.policy, args.mode)
    spec = _load_mixture(args.mixture)
    if spec.n != policy.n:
        raise CliError(EXIT_DIM, f"policy has n={policy.n}, mixture has n={spec.n}")
    j_train = args.j_train if args.j_train is not None else raw.get("j_train")
    if j_train is None:
        raise CliError(EXIT_CONFIG, "no j_train in policy file; pass --j-train")
    if args.test_size < 1 or args.experiments < 1:
        raise CliError(EXIT_CONFIG, "--test-size and --experiments must be positive")
    config = {
        "policy": files.policy_to_dict(policy), "mixture": files.mixture_to_dict(spec), "j_train": j_train,
        "test_size": args.test_size, "experiments": args.experiments, "epsilons": list(args.epsilons),
        "seed": args.seed, "success_gap": args.success_gap,
    }
    run = Run("validate", args, config)
    with run.phase("validate"):
        report = learning.repeated_validation(
            policy, j_train, spec, args.test_size, args.experiments, args.epsilons, args.seed, args.success_gap
        )
    values_path = args.values_out or (str(Path(args.out).with_suffix(".csv")) if args.out else None)
    body = {"risk_report": report.to_dict(), "values_file": values_path}
    _write(run.report(body), args.out)
    if values_path:
        try:
            files.write_values_csv(report.j_test_values, values_path)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {values_path}: {exc}") from None
    return EXIT_OK


def cmd_baseline(args) -> int:
    if (args.mixture is None) == (args.data is None):
        raise CliError(EXIT_CONFIG, "give exactly one of --mixture or --data")
    if args.mixture is not None:
        spec = _load_mixture(args.mixture)
        moments = analytic_moments(spec)
        backend = MonteCarloMixture(spec, args.samples, args.seed) if args.policy else None
        n = spec.n
        source = {"mixture": files.mixture_to_dict(spec), "samples": args.samples}
    else:
        data = _load_data(args.data)
        moments = empirical_moments(data)
        backend = Empirical(data)
        n = data.n_sensors
        source = {"data": str(args.data)}
    run = Run("baseline", args, {**source, "policies": list(args.policy or []), "seed": args.seed})
    idx, est, blind = unicast.blind_baseline(moments)
    body = {"blind": {"schedule_index": idx, "estimates": est.tolist(), "objective": blind}, "policies": []}
    print(f"blind scheduler: sensor {idx}, objective {blind:.10g}")
    first = None
    for path in args.policy or []:
        policy, _ = _load_policy(path)
        if policy.n != n:
            raise CliError(EXIT_DIM, f"{path}: policy has n={policy.n}, source has n={n}")
        value = _objective(policy, backend)
        entry = {"policy_file": str(path), "objective": value, "improvement_over_blind": 1.0 - value / blind}
        if first is not None:
            entry["improvement_over_first_policy"] = 1.0 - value / first
        else:
            first = value
        body["policies"].append(entry)
        print(f"{path}: objective {value:.10g}, improvement over blind {100 * entry['improvement_over_blind']:.2f}%")
    if args.out:
        _write(run.report(body), args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    opts = _opts(args)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    config = {"example": args.example, "restarts": args.restarts, "samples": args.samples,
              "max_iter": args.max_iter, "tol": args.tol, "objective_tol": args.objective_tol}
    run = Run("reproduce", args, config)
    body: dict = {"example": args.example}
    checks = []
    if args.example in ("unicast-mixture", "broadcast-mixture"):
        backend = experiments.mixture_backend(args.samples)
        with run.phase("unicast"):
            u = experiments.run_unicast(backend, args.restarts, seed=args.seed, opts=opts)
        body["unicast"] = {
            "policy": files.policy_to_dict(u["policy"]), "objective": u["objective"],
            "blind_objective": u["blind_objective"], "gain_over_blind": u["gain_over_blind"],
        }
        traces = u["traces"]
        if args.example == "unicast-mixture":
            checks += u["checks"]
        else:
            with run.phase("broadcast"):
                b = experiments.run_broadcast(backend, u["objective"], args.restarts, seed=args.seed, opts=opts)
            body["broadcast"] = {
                "policy": files.policy_to_dict(b["policy"]), "objective": b["objective"],
                "gain_over_unicast": b["gain_over_unicast"], "step_size": b["step_size"],
            }
            traces = b["traces"]
            checks += b["checks"]
        if out:
            _write_endpoints(traces, out / "endpoints.csv")
    else:
        with run.phase("data_driven"):
            d = experiments.run_data_driven(
                test_size=args.test_size, experiments=args.experiments, restarts=args.restarts, opts=opts
            )
        body["data_driven"] = {
            "policy": files.policy_to_dict(d["policy"]), "j_train": d["j_train"], "j_test": d["j_test"],
            "relative_gap": d["relative_gap"], "success": d["success"],
            "population_estimate": d["population_estimate"], "risk_report": d["report"].to_dict(),
        }
        checks += d["checks"]
        if out:
            files.write_values_csv(d["report"].j_test_values, out / "j_test_values.csv")
    body["checks"] = [c.to_dict() for c in checks]
    body["passed"] = all(c.passed for c in checks)
    for c in checks:
        print(c.line())
    if out:
        files.write_json(run.report(body), out / "report.json")
    return EXIT_OK if body["passed"] else EXIT_ACCEPT


def _write_endpoints(traces, path: Path) -> None:
    """One row per restart: terminal point and its objective."""
    dim = len(traces[0].final)
    lines = [",".join([f"v{i + 1}" for i in range(dim)] + ["objective", "iterations", "stop_reason"])]
    for t in traces:
        vals = [f"{v:.17g}" for v in t.final] + [f"{t.objective_values[-1]:.17g}", str(t.iterations), t.stop_reason]
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="default 0; reproduce uses its pinned seed")
    common.add_argument("--restarts", type=int, default=200)
    common.add_argument("--max-iter", type=int, default=500)
    common.add_argument("--tol", type=float, default=1e-8, help="step-norm stopping tolerance")
    common.add_argument("--objective-tol", type=float, default=1e-10)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${_kernels.THREADS_ENV} or CPU count)")
    common.add_argument("--out", default=None)
    common.add_argument("--no-timings", action="store_true", help="leave phase timings out of the manifest")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ddsched", description="Data-driven sensor scheduling for remote estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="sample a dataset from a Gaussian mixture")
    g.add_argument("--mixture", required=True, help="mixture JSON, or 'reference' for the built-in example")
    g.add_argument("--count", type=int, required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", parents=[common], help="multistart CCP on a dataset")
    t.add_argument("--mode", choices=["unicast", "broadcast"], required=True)
    t.add_argument("--data", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", parents=[common], help="objective of a policy on a dataset")
    e.add_argument("--mode", choices=["unicast", "broadcast"], default=None)
    e.add_argument("--policy", required=True)
    e.add_argument("--data", required=True)
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("validate", parents=[common], help="repeated out-of-sample validation")
    v.add_argument("--mode", choices=["unicast", "broadcast"], default=None)
    v.add_argument("--policy", required=True, help="policy JSON or train report")
    v.add_argument("--mixture", required=True)
    v.add_argument("--test-size", type=int, default=100_000)
    v.add_argument("--experiments", type=int, default=1000)
    v.add_argument("--epsilons", type=float, nargs="+", default=[0.001, 0.002, 0.005, 0.01])
    v.add_argument("--j-train", type=float, default=None)
    v.add_argument("--success-gap", type=float, default=0.01)
    v.add_argument("--values-out", default=None, help="CSV of per-experiment test risks")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("baseline", parents=[common], help="blind scheduler and relative improvements")
    b.add_argument("--mixture", default=None)
    b.add_argument("--data", default=None)
    b.add_argument("--policy", action="append", help="trained policy (repeatable)")
    b.add_argument("--samples", type=int, default=10**6, help="Monte Carlo size for policy objectives")
    b.set_defaults(func=cmd_baseline)

    r = sub.add_parser("reproduce", parents=[common], help="rerun a reference example and check it")
    r.add_argument("example", choices=["unicast-mixture", "broadcast-mixture", "data-driven"])
    r.add_argument("--samples", type=int, default=10**6)
    r.add_argument("--test-size", type=int, default=100_000)
    r.add_argument("--experiments", type=int, default=1000)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is None:
        args.seed = experiments.RESTART_SEED if args.command == "reproduce" else 0
    try:
        _kernels.set_threads(args.threads)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except files.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionMismatchError as exc:
        print(f"dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (DegenerateVarianceError, NonFiniteError, TooFewSensorsError, EmptyDataError) as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
