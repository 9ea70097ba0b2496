"""Command-line entry point.

Every run writes its outputs plus ``manifest.json`` (the resolved configuration and
file digests) into the output directory: ``--out``, else ``$NORMSEP_OUT``, else
``./normsep_out``. Exit status is 0 on success, 1 when a check fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import io
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import constructions as C
from . import experiment as E
from . import verify as V
from .bounds import BOUND_IDS, bound_inputs, evaluate_bound
from .compression import maurey_compress
from .errors import DegeneracyError, DomainError, InfeasibleError, NetFormatError, NormsepError, UsageError
from .geometry import load_dataset
from .learning import RuleConfig, TrainConfig, labeled_sample, rule_srm, sweep_path, train_weight_decay
from .net import balance_depth2, load, serialize

log = logging.getLogger("normsep")

DEFAULT_OUT = "normsep_out"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="normsep", description="Norm-controlled ReLU networks of depth 2 and 3.")
    p.add_argument("--version", action="version", version=f"normsep {__version__}")
    sub = p.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--config", help="JSON file whose keys override flags")
        sp.add_argument("--verbose", action="store_true")
        return sp

    sp = common(sub.add_parser("construct", help="build a named construction"))
    sp.add_argument("name", choices=("sawtooth", "square", "inner", "fdk", "tent"))
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--s", type=float, default=math.sqrt(2))
    sp.add_argument("--K", type=int, default=20)
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--m", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)

    sp = common(sub.add_parser("verify", help="run a verification suite"))
    sp.add_argument("suite", choices=tuple(V.SUITES) + ("all",))
    for flag in ("n", "K", "d", "m", "omega"):
        sp.add_argument(f"--{flag}", type=_ints)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seeds", type=int)
    sp.add_argument("--seed", type=int)

    sp = common(sub.add_parser("compress", help="Maurey compression of a depth-2 net"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--restarts", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-eval", type=int, default=20_000)

    for name, helptext in (("train", "weight-decay training on a seeded sample"),
                           ("sweep", "regularization path on a seeded sample")):
        sp = common(sub.add_parser(name, help=helptext))
        sp.add_argument("--data", help="dataset file; default is a seeded sample of the target")
        sp.add_argument("--d", type=int, default=3)
        sp.add_argument("--m", type=int, default=200)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--depth", type=int, default=2)
        sp.add_argument("--width", type=int, default=32)
        sp.add_argument("--iterations", type=int, default=2000)
        sp.add_argument("--restarts", type=int, default=1)
        sp.add_argument("--lr", type=float, default=1e-2)
        if name == "train":
            sp.add_argument("--lam", type=float, default=1e-3)
            sp.add_argument("--theta", type=float, help="threshold rule instead of a fixed lambda")
            sp.add_argument("--alpha", type=float, default=1.0)
        else:
            sp.add_argument("--lam-grid", type=_floats, default=(1e-5, 1e-4, 1e-3, 1e-2, 1e-1))
            sp.add_argument("--warm-start", action="store_true")

    sp = common(sub.add_parser("experiment", help="depth-2 versus depth-3 comparison"))
    sp.add_argument("--d-list", type=_ints)
    sp.add_argument("--m-list", type=_ints)
    sp.add_argument("--seeds", type=int)
    sp.add_argument("--root-seed", type=int)
    sp.add_argument("--n-test", type=int)

    sp = common(sub.add_parser("bound", help="evaluate a closed-form bound"))
    sp.add_argument("bound_id", choices=BOUND_IDS)
    sp.add_argument("--csv", help="evaluate every row of a CSV of inputs")
    for name in sorted({n for b in BOUND_IDS for n in bound_inputs(b)}):
        sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)

    sp = common(sub.add_parser("report", help="summarize an experiment table"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--delta", type=float, default=0.05)
    return p


# ------------------------------------------------------------------ plumbing


def _apply_config(args, parser_defaults):
    if not args.config:
        return {}
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config file must hold a JSON object")
    if args.command == "experiment":
        return raw
    unknown = sorted(set(raw) - set(parser_defaults))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in raw.items():
        setattr(args, k, tuple(v) if isinstance(v, list) else v)
    return {}


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("NORMSEP_OUT") or DEFAULT_OUT)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    return out


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (tuple, np.ndarray)):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


class Run:
    """Collects output files and writes them with a manifest."""

    def __init__(self, args, config: dict):
        self.out = _out_dir(args)
        self.config = config
        self.command = args.command
        self.files = {}

    def write(self, name: str, data) -> Path:
        raw = data.encode() if isinstance(data, str) else data
        path = self.out / name
        path.write_bytes(raw)
        self.files[name] = hashlib.sha256(raw).hexdigest()
        return path

    def close(self):
        manifest = {"command": self.command, "config": self.config, "version": __version__,
                    "files": dict(sorted(self.files.items()))}
        (self.out / "manifest.json").write_text(_json(manifest))


def _resolved(args, drop=("out", "config", "verbose", "command")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


# ------------------------------------------------------------------ subcommands


def cmd_construct(args) -> int:
    name = args.name
    if name == "sawtooth":
        net = C.sawtooth_net(args.n)
        params = {"n": args.n}
        cost_value = balance_depth2(net)[1].cost_value
        bound, bound_id = 0.0, "sawtooth_exact_sup_error"
    elif name == "square":
        net = C.square_net(args.s, args.K)
        params = {"s": args.s, "K": args.K}
        cost_value = balance_depth2(net)[1].cost_value
        bound, bound_id = C.square_error_bound(args.s, args.K), "square_sup_error"
    elif name == "inner":
        beta = 1.0 if args.beta is None else args.beta
        net, cert = C.inner_net(args.d, args.K, beta)
        params = {"d": args.d, "K": args.K, "beta": beta}
        cost_value = cert.cost_value
        bound, bound_id = C.inner_cost_bound(args.d, beta), "inner_cost"
    elif name == "fdk":
        beta = C.default_beta(args.d) if args.beta is None else args.beta
        net, cert = C.deep_approximant(args.d, args.K, beta)
        params = {"d": args.d, "K": args.K, "beta": beta}
        cost_value = cert.cost_value
        bound, bound_id = C.deep_error_bound(args.d, args.K), "fdk_sup_error"
    else:
        data = labeled_sample(args.d, args.m, args.seed)
        net, cert = C.tent_interpolant(data)
        params = {"d": args.d, "m": args.m, "seed": args.seed}
        cost_value = cert.cost_value
        bound, bound_id = C.tent_cost_bound(args.m, C.tent_eta0(data)), "tent_cost_8m_over_eta0"
    run = Run(args, _resolved(args))
    run.write(f"{name}.net.json", serialize(net))
    record = {"construction": name, "params": params, "cost_value": cost_value,
              "bound_value": bound, "bound_formula_id": bound_id}
    run.write(f"{name}.cert.json", _json(record))
    run.close()
    print(json.dumps(record, sort_keys=True))
    return 0


_SUITE_FLAGS = {"n": "n_list", "K": "K_list", "d": "d_list", "omega": "omegas"}


def _suite_params(fn, args) -> dict:
    accepted = inspect.signature(fn).parameters
    params = {}
    for flag in ("n", "K", "d", "m", "omega", "trials", "samples", "seeds", "seed"):
        v = getattr(args, flag, None)
        if v is None:
            continue
        listed = _SUITE_FLAGS.get(flag)
        if listed in accepted:
            params[listed] = tuple(v)
        elif flag in accepted:
            if isinstance(v, tuple):
                if len(v) != 1:
                    raise UsageError(f"--{flag} takes a single value for this suite")
                v = v[0]
            params[flag] = v
    return params


def cmd_verify(args) -> int:
    names = list(V.SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        fn = V.SUITES[name]
        checks.extend(fn(**_suite_params(fn, args)))
    run = Run(args, _resolved(args))
    run.write(f"verify_{args.suite}.csv", V.checks_to_csv(checks))
    run.close()
    sys.stdout.write(V.checks_table(checks))
    return 0 if V.all_passed(checks) else 1


def cmd_compress(args) -> int:
    net = load(args.input)
    rep = maurey_compress(net, args.width, seed=args.seed, restarts=args.restarts, n_eval=args.n_eval)
    run = Run(args, _resolved(args))
    run.write("compressed.net.json", serialize(rep.net))
    record = {"source_mass": rep.source_mass, "width": rep.width, "error_bound": rep.error_bound,
              "l2_error": rep.l2_error, "l2_se": rep.l2_se, "seed": args.seed,
              "restart_errors": list(rep.restart_errors), "sq_norm": rep.sq_norm}
    run.write("compression.json", _json(record))
    run.close()
    print(json.dumps(record, sort_keys=True))
    return 0


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(depth=args.depth, width=args.width, iterations=args.iterations,
                       restarts=args.restarts, lr=args.lr, seed=args.seed)


def _training_data(args):
    if args.data:
        data = load_dataset(args.data)
        if data.labels is None:
            raise UsageError(f"{args.data} has no labels")
        return data
    return labeled_sample(args.d, args.m, [args.seed, 1])


def cmd_train(args) -> int:
    data = _training_data(args)
    cfg = _train_cfg(args)
    status = 0
    if args.theta is None:
        res = train_weight_decay(data, replace(cfg, lam=args.lam))
        net, record = res.net, {"lambda": res.lam, "loss": res.loss, "cost": res.cost,
                                "objective": res.objective}
    else:
        rule = RuleConfig(theta=args.theta, alpha=args.alpha, depth=args.depth, width=args.width)
        try:
            res = rule_srm(data, rule, base_cfg=cfg)
        except InfeasibleError as exc:
            print(str(exc), file=sys.stderr)
            net, record = exc.best.net, {"lambda": exc.best.lam, "loss": exc.best.loss,
                                         "cost": exc.best.cost, "status": "infeasible"}
            status = 1
        else:
            net, record = res.net, {"lambda": res.lam, "loss": res.loss, "cost": res.cost,
                                    "status": "ok", "models_evaluated": len(res.evaluated)}
    run = Run(args, _resolved(args))
    run.write("trained.net.json", serialize(net))
    run.write("training.json", _json(record))
    run.close()
    print(json.dumps(record, sort_keys=True))
    return status


def cmd_sweep(args) -> int:
    data = _training_data(args)
    res = sweep_path(data, args.depth, args.width, args.lam_grid, _train_cfg(args), args.warm_start)
    front = {id(p) for p in res.frontier}
    rows = [{"lambda": p.lam, "loss": p.loss, "cost": p.cost, "on_frontier": int(id(p) in front)}
            for p in res.points]
    rows += [{"lambda": lam, "loss": "", "cost": "", "on_frontier": 0} for lam, _ in res.failures]
    run = Run(args, _resolved(args))
    run.write("sweep.csv", E.rows_to_csv(sorted(rows, key=lambda r: r["lambda"]),
                                         ("lambda", "loss", "cost", "on_frontier")))
    run.close()
    for r in rows:
        print(f"lambda={r['lambda']:.3g} loss={r['loss']} cost={r['cost']} frontier={r['on_frontier']}")
    return 0


def cmd_experiment(args, raw_config: dict) -> int:
    flags = {"d_list": args.d_list, "m_list": args.m_list, "seeds": args.seeds,
             "root_seed": args.root_seed, "n_test": args.n_test}
    merged = {k: v for k, v in flags.items() if v is not None}
    merged.update(raw_config)
    cfg = E.ExperimentConfig.from_dict(merged)

    def progress(d, m, rep):
        log.info("finished d=%d m=%d seed=%d", d, m, rep)

    rows = E.run_separation_experiment(cfg, progress)
    summary = E.summarize(rows, cfg.delta)
    run = Run(args, cfg.to_dict())
    run.write("experiment.csv", E.rows_to_csv(rows))
    run.write("summary.txt", E.summary_text(summary))
    run.write("trend_cells.csv", E.rows_to_csv(summary["trend_cells"],
                                               ("d", "m", "depth2_test", "depth3_test", "depth3_wins")))
    run.close()
    sys.stdout.write(E.summary_text(summary))
    ok = summary["cost_vs_tent_ok"] and summary["trend_ok"] and summary["gap_ok"]
    return 0 if ok else 1


def cmd_bound(args) -> int:
    names = bound_inputs(args.bound_id)
    if args.csv:
        try:
            text = Path(args.csv).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {args.csv}: {exc}") from None
        rows = list(csv.DictReader(io.StringIO(text)))
        reports = [evaluate_bound(args.bound_id, **{k: float(v) for k, v in r.items()}) for r in rows]
    else:
        given = {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}
        reports = [evaluate_bound(args.bound_id, **given)]
    records = [r.as_record() for r in reports]
    run = Run(args, _resolved(args))
    run.write(f"bound_{args.bound_id}.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    run.close()
    for r in records:
        print(json.dumps(r, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    rows = E.csv_to_rows(text)
    summary = E.summarize(rows, args.delta)
    run = Run(args, _resolved(args))
    run.write("summary.txt", E.summary_text(summary))
    run.write("trend_cells.csv", E.rows_to_csv(summary["trend_cells"],
                                               ("d", "m", "depth2_test", "depth3_test", "depth3_wins")))
    run.close()
    sys.stdout.write(E.summary_text(summary))
    return 0


COMMANDS = {"construct": cmd_construct, "verify": cmd_verify, "compress": cmd_compress,
            "train": cmd_train, "sweep": cmd_sweep, "bound": cmd_bound, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help and --version
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        defaults = {k for k in vars(args) if k not in ("command", "config")}
        raw = _apply_config(args, defaults)
        if args.command == "experiment":
            return cmd_experiment(args, raw)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"normsep: usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, DegeneracyError, NetFormatError) as exc:
        print(f"normsep: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"normsep: {exc}", file=sys.stderr)
        return 2
    except NormsepError as exc:
        print(f"normsep: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
