"""Command-line entry point: ``taskuq {measure,selective,ood,active,check}``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 self-check
failure. Output files are written atomically; a failed run leaves none
behind. Without ``--output`` results go to ``$TASKUQ_OUTPUT_DIR`` (default
``./results``) as ``<command>.<format>``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import checks, experiments
from .active import STRATEGIES
from .core import SecondOrderEnsemble, SimplexError
from .data import DataError, MixtureSpec, default_spec, load_csv, rare_region_spec
from .measures import COMPONENTS, MODES, decompose
from .scoring import BUILTIN_RULES

OUTPUT_ENV = "TASKUQ_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CHECK = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# --- argument helpers -------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("need at least one value")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("seeds must be non-negative")
    return vals


def _choice_list(choices):
    def parse(text: str) -> list[str]:
        vals = [v.strip() for v in text.split(",") if v.strip()]
        bad = [v for v in vals if v not in choices]
        if bad or not vals:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(choices)}; got {text!r}")
        return vals

    return parse


def _add_common(p: argparse.ArgumentParser, fmt_default: str):
    p.add_argument("--config", type=Path, help="JSON file of option defaults (keys are option names)")
    p.add_argument("--output", "-o", type=Path, help=f"output file (default: ${OUTPUT_ENV}/<command>.<format>)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default, help=f"default: {fmt_default}")


def _add_seeds(p, default="0,1,2"):
    p.add_argument("--seeds", type=_int_list, default=_int_list(default), help=f"comma-separated seeds (default: {default})")


def _add_learner(p):
    p.add_argument("--trees", type=int, default=20, help="ensemble size T = M (default: 20)")
    p.add_argument("--depth", type=int, default=5, help="maximum tree depth (default: 5)")
    p.add_argument(
        "--max-features",
        default=None,
        help="features searched per split: 'sqrt', 'log2' or an integer (default: all)",
    )


def _add_spec(p):
    p.add_argument("--spec", type=Path, help="JSON mixture spec (means, scales, class_priors, label_flip)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="taskuq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("measure", help="decompose ensembles read from a JSON file")
    p.add_argument("input", type=Path, help="JSON list of ensembles (lists of probability vectors)")
    p.add_argument("--rules", type=_choice_list(BUILTIN_RULES), default=list(BUILTIN_RULES), help="default: all")
    p.add_argument("--mode", choices=MODES, default="auto")
    _add_common(p, "json")

    p = sub.add_parser("selective", help="loss-rejection curves / AULC table")
    _add_spec(p)
    p.add_argument("--csv", type=Path, help="tabular data instead of the synthetic spec (70/30 split per seed)")
    p.add_argument("--label-column", default="label")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--rules", type=_choice_list(BUILTIN_RULES), default=list(BUILTIN_RULES))
    p.add_argument("--components", type=_choice_list(COMPONENTS), default=["tu"], help="default: tu")
    p.add_argument("--curves-dir", type=Path, help="also write one alpha/loss CSV per curve here")
    _add_seeds(p)
    _add_learner(p)
    _add_common(p, "csv")

    p = sub.add_parser("ood", help="AUROC of uncertainty scores on shifted data")
    _add_spec(p)
    p.add_argument("--shift", type=float, default=10.0, help="mean shift in units of the average scale (default: 10)")
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--n-ood", type=int, default=1000)
    p.add_argument("--rules", type=_choice_list(BUILTIN_RULES), default=list(BUILTIN_RULES))
    p.add_argument("--components", type=_choice_list(COMPONENTS), default=["eu"], help="default: eu")
    _add_seeds(p)
    _add_learner(p)
    _add_common(p, "csv")

    p = sub.add_parser("active", help="pool-based active learning curves")
    _add_spec(p)
    p.add_argument("--strategies", type=_choice_list(tuple(STRATEGIES)), default=list(STRATEGIES))
    p.add_argument("--pool", type=int, default=5000)
    p.add_argument("--test", type=int, default=2000)
    p.add_argument("--initial", type=int, default=50)
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--rounds", type=int, default=20)
    _add_seeds(p)
    _add_learner(p)
    _add_common(p, "csv")

    p = sub.add_parser("check", help="run the randomized self-check suites")
    p.add_argument("--n", type=int, default=1000, help="random ensembles per suite (default: 1000)")
    p.add_argument("--seed", type=int, default=0)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is not None:
        cfg = _read_json(args.config, ConfigError)
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if dest not in dests or dest in ("config", "help"):
                raise ConfigError(f"{args.config}: unknown option {key!r}")
            action = dests[dest]
            if isinstance(val, list):
                val = ",".join(str(v) for v in val)
            if action.type is not None and isinstance(val, str):
                try:
                    val = action.type(val)
                except argparse.ArgumentTypeError as exc:
                    raise ConfigError(f"{args.config}: {key}: {exc}") from None
            defaults[dest] = val
        if "spec" in defaults and isinstance(defaults["spec"], dict):
            defaults["spec_inline"] = defaults.pop("spec")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# --- I/O --------------------------------------------------------------------


def _read_json(path: Path, err=DataError):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise err(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise err(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None


def _output_path(args) -> Path:
    if args.output is not None:
        return args.output
    return Path(os.environ.get(OUTPUT_ENV, "results")) / f"{args.command}.{args.format}"


@contextlib.contextmanager
def _atomic_write(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _write_rows(path: Path, header, rows):
    with _atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj):
    with _atomic_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spec_from_args(args, fallback) -> MixtureSpec:
    try:
        if getattr(args, "spec_inline", None) is not None:
            return MixtureSpec.from_dict(args.spec_inline)
        if args.spec is not None:
            return MixtureSpec.from_dict(_read_json(args.spec, ConfigError))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid mixture spec: {exc}") from None
    return fallback()


def _learner(args) -> experiments.LearnerParams:
    if args.trees < 1 or args.depth < 0:
        raise ConfigError("--trees must be >= 1 and --depth >= 0")
    mf = args.max_features
    if mf is not None and mf not in ("sqrt", "log2"):
        try:
            mf = int(mf)
        except ValueError:
            raise ConfigError(f"--max-features: expected sqrt, log2 or an integer, got {mf!r}") from None
    return experiments.LearnerParams(args.trees, args.depth, mf)


def _summary(values) -> tuple[float, float]:
    return float(np.mean(values)), float(np.std(values))


# --- commands ---------------------------------------------------------------


def _parse_ensembles(obj) -> list[SecondOrderEnsemble]:
    if isinstance(obj, dict) and "ensembles" in obj:
        obj = obj["ensembles"]
    if not isinstance(obj, list):
        raise DataError("expected a JSON list of ensembles")
    out = []
    for i, item in enumerate(obj):
        try:
            if isinstance(item, dict):
                out.append(SecondOrderEnsemble(np.array(item["members"], dtype=float), item.get("weights")))
            else:
                out.append(SecondOrderEnsemble(np.array(item, dtype=float)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"ensemble {i}: {exc}") from None
    return out


def cmd_measure(args) -> int:
    ensembles = _parse_ensembles(_read_json(args.input))
    records = []
    for i, Q in enumerate(ensembles):
        for r in args.rules:
            t = decompose(r, Q, args.mode)
            records.append({"index": i, "rule": r, "M": Q.M, "K": Q.K, "tu": t.tu, "au": t.au, "eu": t.eu})
    path = _output_path(args)
    if args.format == "json":
        _write_json(path, records)
    else:
        cols = ["index", "rule", "M", "K", "tu", "au", "eu"]
        _write_rows(path, cols, [[rec[c] for c in cols] for rec in records])
    print(f"measure: {len(ensembles)} ensembles x {len(args.rules)} rules -> {path}")
    return EXIT_OK


def cmd_selective(args) -> int:
    learner = _learner(args)
    csv_data = None
    spec = None
    if args.csv is not None:
        csv_data = load_csv(args.csv, args.label_column, args.delimiter)
    else:
        spec = _spec_from_args(args, default_spec)
    table, curves = experiments.selective_table(
        spec,
        args.seeds,
        args.n_train,
        args.n_test,
        learner,
        tuple(args.rules),
        tuple(args.components),
        csv_data=csv_data,
        keep_curves=args.curves_dir is not None,
    )
    path = _output_path(args)
    keys = [(c, u, t) for c in args.components for u in args.rules for t in args.rules]
    if args.format == "json":
        _write_json(
            path,
            {
                "seeds": args.seeds,
                "results": [
                    {
                        "component": c,
                        "unc_rule": u,
                        "task_rule": t,
                        "aulc": table.values[(c, u, t)],
                        "mean": table.mean((c, u, t)),
                        "std": table.std((c, u, t)),
                    }
                    for c, u, t in keys
                ],
            },
        )
    else:
        header = ["component", "unc_rule", "task_rule", "aulc_mean", "aulc_std"] + [f"seed_{s}" for s in args.seeds]
        rows = [[c, u, t, table.mean((c, u, t)), table.std((c, u, t)), *table.values[(c, u, t)]] for c, u, t in keys]
        _write_rows(path, header, rows)
    if args.curves_dir is not None:
        for (c, u, t, s), curve in sorted(curves.items()):
            rows = [[a, v] for a, v in curve.rows()] + [["aulc", curve.aulc]]
            _write_rows(args.curves_dir / f"curve_{c}_{u}_{t}_seed{s}.csv", ["alpha", "loss"], rows)
    print(f"selective: {len(keys)} configurations x {len(args.seeds)} seeds -> {path}")
    return EXIT_OK


def cmd_ood(args) -> int:
    if args.shift < 0:
        raise ConfigError("--shift must be >= 0")
    spec = _spec_from_args(args, default_spec)
    table = experiments.ood_table(
        spec,
        args.seeds,
        args.shift,
        args.n_train,
        args.n_test,
        args.n_ood,
        _learner(args),
        tuple(args.rules),
        tuple(args.components),
    )
    keys = [(r, c) for r in args.rules for c in args.components]
    path = _output_path(args)
    if args.format == "json":
        _write_json(
            path,
            {
                "seeds": args.seeds,
                "shift": args.shift,
                "results": [
                    {"rule": r, "component": c, "auroc": table.values[(r, c)], "mean": table.mean((r, c)), "std": table.std((r, c))}
                    for r, c in keys
                ],
            },
        )
    else:
        header = ["rule", "component", "auroc_mean", "auroc_std"] + [f"seed_{s}" for s in args.seeds]
        _write_rows(path, header, [[r, c, table.mean((r, c)), table.std((r, c)), *table.values[(r, c)]] for r, c in keys])
    print(f"ood: {len(keys)} scores x {len(args.seeds)} seeds -> {path}")
    return EXIT_OK


def cmd_active(args) -> int:
    spec = _spec_from_args(args, rare_region_spec)
    learner = _learner(args)
    if args.max_features is not None:
        raise ConfigError("active learning uses plain bagging; --max-features is not supported")
    if min(args.initial, args.budget) < 1 or args.rounds < 0:
        raise ConfigError("--initial and --budget must be >= 1, --rounds >= 0")
    if args.initial + args.rounds * args.budget > args.pool:
        raise ConfigError("--initial + --rounds * --budget exceeds --pool")
    curves = experiments.active_curves(
        spec, args.seeds, tuple(args.strategies), args.pool, args.test, args.initial, args.budget, args.rounds, learner
    )
    path = _output_path(args)
    if args.format == "json":
        out = {"seeds": args.seeds, "strategies": {}}
        for s, cs in curves.items():
            losses = np.array([c.task_losses for c in cs])
            out["strategies"][s] = {
                "labeled_counts": cs[0].labeled_counts.tolist(),
                "zero_one_loss": {str(c.seed): c.task_losses.tolist() for c in cs},
                "mean": losses.mean(axis=0).tolist(),
                "std": losses.std(axis=0).tolist(),
            }
        _write_json(path, out)
    else:
        rows = []
        for s, cs in curves.items():
            for c in cs:
                rows += [[r, n, v, s, c.seed] for r, (n, v) in enumerate(zip(c.labeled_counts.tolist(), c.task_losses.tolist()))]
            losses = np.array([c.task_losses for c in cs])
            counts = cs[0].labeled_counts.tolist()
            for label, stat in (("mean", losses.mean(axis=0)), ("std", losses.std(axis=0))):
                rows += [[r, n, v, s, label] for r, (n, v) in enumerate(zip(counts, stat.tolist()))]
        _write_rows(path, ["round", "labeled_count", "zero_one_loss", "strategy", "seed"], rows)
    print(f"active: {len(curves)} strategies x {len(args.seeds)} seeds -> {path}")
    return EXIT_OK


def cmd_check(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    passed = total = 0
    for name, n_cases, fails in checks.run_all(args.n, args.seed):
        total += 1
        status = "PASS" if not fails else "FAIL"
        passed += not fails
        print(f"{status}  {name}  ({n_cases} cases, {len(fails)} failures)")
        for f in fails[:5]:
            print(f"      {f}")
    print(f"passed {passed}/{total} property suites")
    return EXIT_OK if passed == total else EXIT_CHECK


COMMANDS = {
    "measure": cmd_measure,
    "selective": cmd_selective,
    "ood": cmd_ood,
    "active": cmd_active,
    "check": cmd_check,
}


def run(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"taskuq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SimplexError, OSError) as exc:
        print(f"taskuq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"taskuq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())
