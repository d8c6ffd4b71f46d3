"""``hwcodesign`` command-line entry point.

Every subcommand writes into ``--out-dir`` a ``manifest.json`` plus a
``results.csv`` (and model checkpoints / extra CSV / SVG where relevant).
Exit codes: 0 success, 2 validation error, 3 training failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import __version__
from .. import costtable as ct
from ..accel import space as hw
from ..accel.costmodel import PerfReport, simulate
from ..gradcore.checkpoint import CheckpointError, file_hash
from ..nnspace import Architecture, random_architectures, supernet, workloads_of
from .config import ConfigError, Settings

log = logging.getLogger("hwcodesign")

EXIT_OK, EXIT_VALIDATION, EXIT_TRAINING = 0, 2, 3


class CliError(ValueError):
    pass


class Run:
    """Output directory, effective settings and manifest bookkeeping for one invocation."""

    def __init__(self, args, settings: Settings, config_text: str | None):
        self.args = args
        self.settings = settings
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = args.seed
        self.checkpoints: dict[str, str] = {}
        self.config_hash = hashlib.sha256((config_text or "").encode()).hexdigest()
        self.started = time.perf_counter()

    def path(self, name: str) -> Path:
        return self.out / name

    def use_checkpoint(self, role: str, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise CliError(f"missing {role} checkpoint: {path}")
        self.checkpoints[role] = file_hash(path)
        return path

    def wrote_checkpoint(self, role: str, digest: str):
        self.checkpoints[role] = digest

    def write_csv(self, name: str, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def finish(self, subcommand: str):
        manifest = {
            "command": "hwcodesign " + " ".join(self.args.argv),
            "subcommand": subcommand,
            "config_hash": self.config_hash,
            "settings_hash": self.settings.digest(),
            "settings": self.settings.to_json(),
            "seed": self.seed,
            "checkpoints": dict(sorted(self.checkpoints.items())),
            "version": __version__,
            "wall_clock_s": round(time.perf_counter() - self.started, 3),
        }
        self.path("manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def fmt(v) -> str:
    return repr(float(v))


def parse_hw(text: str) -> hw.HwConfig:
    if text == "default":
        return hw.DEFAULT_CONFIG
    try:
        config = hw.HwConfig(*(int(v) for v in text.split("-")))
    except (TypeError, ValueError):
        raise CliError(f"--hw must be 'default' or seven dash-separated integers, got {text!r}") from None
    hw.check_range(config)
    return config


def parse_arch(text: str, dataset: str) -> Architecture:
    n = supernet(dataset).n_blocks
    try:
        arch = Architecture.from_string(text)
    except ValueError:
        raise CliError(f"--arch must use the characters 3, 5, 7, x; got {text!r}") from None
    if len(arch) != n:
        raise CliError(f"--arch needs {n} choices for {dataset}, got {len(arch)}")
    return arch


def _rng_archs(dataset: str, n: int, seed) -> np.ndarray:
    return random_architectures(supernet(dataset), n, np.random.default_rng(seed))


# held-out architecture sets use seeds disjoint from training seeds
TEST_ARCH_SEED = 10_123
VAL_ARCH_SEED = 10_020


def _load_predictor(run: Run, path):
    from ..surrogates.predictor import PerfPredictor
    return PerfPredictor.load(run.use_checkpoint("predictor", path))


def _load_validnet(run: Run, path):
    from ..surrogates.validnet import ValidNet
    return ValidNet.load(run.use_checkpoint("validnet", path))


def _load_agent(run: Run, path):
    from ..rlopt import HwOptAgent
    return HwOptAgent.load(run.use_checkpoint("agent", path))


def _require(value, flag: str):
    if value is None:
        raise CliError(f"{flag} is required")
    return value


# subcommands ------------------------------------------------------------------

def cmd_space_stats(run: Run):
    total = hw.FULL_SPACE.cardinality
    valid = int(hw.valid_mask(hw.FULL_SPACE.as_array()).sum())
    frac = valid / total
    run.write_csv("results.csv", ["total", "valid", "valid_fraction"], [[total, valid, fmt(frac)]])
    print(f"total {total}\nvalid {valid}\nvalid_fraction {frac!r}")


def cmd_simulate(run: Run):
    dataset = run.settings.get("data", "dataset")
    arch = parse_arch(_require(run.args.arch, "--arch"), dataset)
    config = parse_hw(run.args.hw)
    report = simulate(workloads_of(arch, supernet(dataset)), config)
    text = report.to_csv()
    run.path("results.csv").write_text(text)
    print(text, end="")


def cmd_gen_data(run: Run):
    from ..surrogates.dataset import gen_dataset, gen_validity_dataset
    s = run.settings
    if run.args.kind == "perf":
        n = s.get("data", "n")
        data = gen_dataset(n, run.seed, s.get("data", "dataset"))
    else:
        n = s.get("data", "validity_n")
        data = gen_validity_dataset(n, run.seed)
    data.to_csv(run.path("dataset.csv"))
    run.write_csv("results.csv", ["kind", "n"], [[run.args.kind, n]])


def _read_dataset(run: Run, path, kind: str):
    from ..surrogates.dataset import PerfDataset, validity_from_csv
    path = Path(_require(path, "--data"))
    if not path.exists():
        raise CliError(f"missing dataset: {path}")
    run.checkpoints["dataset"] = file_hash(path)
    try:
        if kind == "perf":
            return PerfDataset.from_csv(path, run.settings.get("data", "dataset"))
        return validity_from_csv(path)
    except (ValueError, IndexError) as exc:
        raise CliError(f"malformed dataset {path}: {exc}") from None


def cmd_train_pred(run: Run):
    from ..surrogates.predictor import TrainConfig, train_predictor
    s = run.settings
    metric = s.get("predictor", "metric")
    if metric not in ct.METRICS:
        raise CliError(f"metric must be one of {ct.METRICS}")
    data = _read_dataset(run, run.args.data, "perf")
    train, test = data.split(run.seed, s.get("data", "test_fraction"))
    cfg = TrainConfig(epochs=s.get("predictor", "epochs"), lr=s.get("predictor", "lr"),
                      batch_size=s.get("predictor", "batch_size"), seed=run.seed)
    pred, summary = train_predictor(train, metric, cfg, test)
    run.wrote_checkpoint("predictor", pred.save(run.path("predictor.json")))
    run.write_csv("curve.csv", ["epoch", "train_l1"], [[k, fmt(v)] for k, v in enumerate(pred.curve)])
    tau = summary.get("kendall_tau", float("nan"))
    run.write_csv("results.csv", ["metric", "n_train", "n_test", "train_l1", "kendall_tau"],
                  [[metric, len(train), len(test), fmt(summary["train_l1"]), fmt(tau)]])
    print(f"{metric} predictor: held-out kendall tau {tau:.4f}")


def cmd_train_validnet(run: Run):
    from ..surrogates.validnet import train_validnet
    s = run.settings
    data = _read_dataset(run, run.args.data, "validity")
    train, test = data.split(run.seed, s.get("data", "test_fraction"))
    net, summary = train_validnet(train, s.get("validnet", "epochs"), s.get("validnet", "lr"),
                                  s.get("validnet", "batch_size"), run.seed, test)
    run.wrote_checkpoint("validnet", net.save(run.path("validnet.json")))
    run.write_csv("results.csv", ["n_train", "n_test", "train_loss", "accuracy"],
                  [[len(train), len(test), fmt(summary["train_loss"]), fmt(summary.get("accuracy", np.nan))]])
    print(f"validnet: held-out accuracy {summary.get('accuracy', float('nan')):.4f}")


def cmd_train_rl(run: Run):
    from ..rlopt import dqn_train, optimality, ppo_train
    from ..rlopt.tuned import tuned
    s = run.settings
    setting, algo = s.get("rl", "setting"), s.get("rl", "algo")
    env_cfg, hp = tuned(setting, algo)
    predictor = _load_predictor(run, _require(run.args.predictor, "--predictor"))
    env_cfg = replace(env_cfg, metric=predictor.metric)
    hp = replace(hp, total_steps=s.get("rl", "steps"))
    dataset = s.get("data", "dataset")
    val = _rng_archs(dataset, s.get("rl", "n_val"), VAL_ARCH_SEED)

    def callback(agent, step):
        return {"val_optimality": optimality(agent, val, dataset=dataset).optimality}

    train = ppo_train if algo == "ppo" else dqn_train
    agent, history = train(setting, env_cfg, hp, run.seed, predictor, callback=callback)
    run.wrote_checkpoint("agent", agent.save(run.path("agent.json")))
    run.write_csv("training_log.csv", ["step", "mean_return", "val_optimality"],
                  [[r["step"], fmt(r["mean_return"]), fmt(r["val_optimality"])] for r in history])
    final = history[-1]["val_optimality"] if history else optimality(agent, val, dataset=dataset).optimality
    run.write_csv("results.csv", ["setting", "algo", "steps", "val_optimality"],
                  [[setting, algo, hp.total_steps, fmt(final)]])
    print(f"{algo} {setting}: validation optimality {final:.2f}%")


def cmd_eval_rl(run: Run):
    from ..rlopt import optimality
    s = run.settings
    agent = _load_agent(run, _require(run.args.agent, "--agent"))
    dataset = s.get("data", "dataset")
    test = _rng_archs(dataset, s.get("rl", "n_test"), TEST_ARCH_SEED)
    evaluator = s.get("rl", "evaluator")
    predictor = _load_predictor(run, run.args.predictor) if evaluator == "predictor" else None
    res = optimality(agent, test, evaluator=evaluator, predictor=predictor, dataset=dataset)
    run.write_csv("results.csv", ["setting", "algo", "metric", "evaluator", "n_test", "optimality", "n_invalid"],
                  [[agent.setting, agent.algo, agent.env_cfg.metric, evaluator, len(test),
                    fmt(res.optimality), res.n_invalid]])
    print(f"optimality {res.optimality:.2f}% ({res.n_invalid} invalid of {len(test)})")


# codesign family ----------------------------------------------------------------

def _run_cfg(run: Run, seed: int, lam=None):
    from ..codesign import RunConfig
    s = run.settings
    return RunConfig(lam=s.get("codesign", "lam") if lam is None else lam,
                     iterations=s.get("codesign", "iterations"), lr=s.get("codesign", "lr"), seed=seed,
                     dataset=s.get("data", "dataset"))


def _codesign_job(job):
    """Picklable worker: ``(kind, settings-json, seed, paths)`` -> csv rows."""
    from ..codesign import (dshwnas_sweep, hwaware_nas_run, make_oracle, rhnas_run, sequential_opt_run)
    from ..rlopt import HwOptAgent
    from ..surrogates.predictor import PerfPredictor
    from ..surrogates.validnet import ValidNet
    kind, cfg, kappa, paths, betas = job
    oracle = make_oracle(supernet(cfg.dataset).n_blocks, cfg.seed, kappa)
    predictor = PerfPredictor.load(paths["predictor"]) if "predictor" in paths else None
    agent = HwOptAgent.load(paths["agent"]) if "agent" in paths else None
    if kind == "codesign":
        results = [rhnas_run(cfg, agent, predictor, oracle),
                   sequential_opt_run(cfg, agent, oracle),
                   hwaware_nas_run(cfg, predictor, oracle),
                   hwaware_nas_run(replace(cfg, lam=0.0), predictor, oracle)]
        results[-1].method = "nas-h0"
    elif kind == "hwnas":
        results = [hwaware_nas_run(cfg, predictor, oracle)]
    elif kind == "seq":
        results = [sequential_opt_run(cfg, agent, oracle)]
    else:
        results = dshwnas_sweep(cfg, predictor, ValidNet.load(paths["validnet"]), oracle, betas)
    return [r.csv_row() for r in results]


def _map(run: Run, fn, jobs):
    n = max(1, run.args.jobs)
    if n == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(min(n, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _codesign_family(run: Run, kind: str, subcommand: str):
    from ..codesign import RESULT_COLUMNS
    s = run.settings
    paths = {}
    if kind in ("codesign", "hwnas", "dshwnas"):
        paths["predictor"] = str(run.use_checkpoint("predictor", _require(run.args.predictor, "--predictor")))
    if kind in ("codesign", "seq"):
        paths["agent"] = str(run.use_checkpoint("agent", _require(run.args.agent, "--agent")))
    if kind == "dshwnas":
        paths["validnet"] = str(run.use_checkpoint("validnet", _require(run.args.validnet, "--validnet")))
    seeds = [run.seed] if run.args.seed_given else list(s.get("codesign", "seeds"))
    jobs = [(kind, _run_cfg(run, seed), s.get("codesign", "kappa"), paths, s.get("codesign", "betas"))
            for seed in seeds]
    rows = [row for part in _map(run, _codesign_job, jobs) for row in part]
    run.write_csv("results.csv", RESULT_COLUMNS, rows)
    for r in rows:
        print(",".join(r))


def cmd_codesign(run: Run):
    _codesign_family(run, "codesign", "codesign")


def cmd_baseline(run: Run):
    which = run.args.which
    if which in ("hwnas", "seq", "dshwnas"):
        return _codesign_family(run, which, f"baseline-{which}")
    from ..codesign import LAMBDA_SWEEP, exhaustive_hwgen_train, perf_hwgen_train, score_generator
    s = run.settings
    dataset = s.get("data", "dataset")
    rng = np.random.default_rng(run.seed)
    train = random_architectures(supernet(dataset), s.get("codesign", "hwgen_train"), rng)
    test = _rng_archs(dataset, s.get("codesign", "hwgen_test"), TEST_ARCH_SEED)
    epochs = s.get("codesign", "hwgen_epochs")
    header = ["generator", "lam", "optimality", "invalid_fraction", "n_test"]
    if which == "exhaustive-hwgen":
        gen = exhaustive_hwgen_train(train, epochs=epochs, seed=run.seed, dataset=dataset)
        run.wrote_checkpoint("hwgen", gen.save(run.path("hwgen.json")))
        sc = score_generator(gen, test, dataset=dataset)
        rows = [["exhaustive", "", fmt(sc.optimality), fmt(sc.invalid_fraction), sc.n]]
    else:
        predictor = _load_predictor(run, _require(run.args.predictor, "--predictor"))
        validnet = _load_validnet(run, _require(run.args.validnet, "--validnet"))
        rows = []
        for lam in s.get("codesign", "hwgen_lambdas") or LAMBDA_SWEEP:
            gen = perf_hwgen_train(train, predictor, validnet, lam, epochs=epochs, seed=run.seed)
            sc = score_generator(gen, test, dataset=dataset)
            opt = "" if np.isnan(sc.optimality) else fmt(sc.optimality)
            rows.append(["perf", fmt(lam), opt, fmt(sc.invalid_fraction), sc.n])
    run.write_csv("results.csv", header, rows)
    for r in rows:
        print(",".join(str(v) for v in r))


def cmd_study(run: Run):
    s = run.settings
    if run.args.which == "grad-interp":
        from ..surrogates.studies import gradient_contrast
        net = _load_validnet(run, _require(run.args.validnet, "--validnet"))
        g = gradient_contrast(net, s.get("study", "triples"), s.get("study", "steps"), run.seed)
        run.write_csv("heatmap.csv", [f"g{j}" for j in range(hw.ONEHOT_SIZE)],
                      [[fmt(v) for v in row] for row in g["mean_map"]])
        run.write_csv("results.csv", ["near_valid", "near_invalid", "contrast"],
                      [[fmt(g["near_valid"]), fmt(g["near_invalid"]), fmt(g["contrast"])]])
        from .report import heatmap_svg
        heatmap_svg(g["mean_map"], run.path("heatmap.svg"), g["phis"])
        print(f"gradient contrast {g['contrast']:.3f}")
    else:
        from ..surrogates.studies import interpolation_ratios
        pred = _load_predictor(run, _require(run.args.predictor, "--predictor"))
        n_blocks = pred.nn_size // 4
        r = interpolation_ratios(pred, n_blocks, hw.DEFAULT_CONFIG, s.get("study", "distributions"),
                                 s.get("study", "samples"), run.seed)
        run.write_csv("ratios.csv", ["ratio"], [[fmt(v)] for v in r])
        run.write_csv("results.csv", ["mean", "variance", "n"], [[fmt(r.mean()), fmt(r.var()), len(r)]])
        print(f"interpolation ratio mean {r.mean():.4f} variance {r.var():.5f}")


def cmd_report(run: Run):
    from .report import heatmap_svg, load_runs, ordering_table, scatter_svg
    from ..codesign import RESULT_COLUMNS
    rows, heatmaps = load_runs(run.args.runs)
    if not rows and not heatmaps:
        raise CliError("no codesign or grad-interp runs among the inputs")
    if rows:
        run.write_csv("results.csv", RESULT_COLUMNS, [[r[c] for c in RESULT_COLUMNS] for r in rows])
        table = ordering_table(rows)
        run.write_csv("ordering.csv", ["seed", "rhnas_latency_s", "sequential_latency_s", "hwnas_latency_s",
                                       "ordered"], table)
        scatter_svg(rows, run.path("scatter.svg"))
        for t in table:
            print(f"seed {t[0]}: rhnas {float(t[1]):.3e} <= sequential {float(t[2]):.3e} "
                  f"<= hwnas {float(t[3]):.3e} : {'yes' if t[4] == '1' else 'no'}")
    for k, grid in enumerate(heatmaps):
        name = "heatmap.svg" if len(heatmaps) == 1 else f"heatmap_{k}.svg"
        heatmap_svg(grid, run.path(name))


COMMANDS = {
    "space-stats": cmd_space_stats, "simulate": cmd_simulate, "gen-data": cmd_gen_data,
    "train-pred": cmd_train_pred, "train-validnet": cmd_train_validnet, "train-rl": cmd_train_rl,
    "eval-rl": cmd_eval_rl, "codesign": cmd_codesign, "baseline": cmd_baseline, "study": cmd_study,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file with [data], [predictor], [validnet], [rl], "
                                         "[codesign], [study] sections")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default="out")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--dataset", choices=("cifar10", "imagenet"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hwcodesign", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hwcodesign {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("space-stats", parents=[common], help="size and valid fraction of the HW space")
    sp = sub.add_parser("simulate", parents=[common], help="simulate one architecture on one config")
    sp.add_argument("--arch", help="choice string such as 333333333")
    sp.add_argument("--hw", default="default", help="'default' or e.g. 4-4-5-5-15-18-17")
    sp = sub.add_parser("gen-data", parents=[common], help="simulator-labelled dataset")
    sp.add_argument("--kind", choices=("perf", "validity"), default="perf")
    sp.add_argument("--n", type=int)
    sp = sub.add_parser("train-pred", parents=[common], help="train a performance predictor")
    sp.add_argument("--data")
    sp.add_argument("--metric", choices=ct.METRICS)
    sp.add_argument("--epochs", type=int)
    sp = sub.add_parser("train-validnet", parents=[common], help="train the validity classifier")
    sp.add_argument("--data")
    sp.add_argument("--epochs", type=int)
    sp = sub.add_parser("train-rl", parents=[common], help="train the RL HW optimizer")
    sp.add_argument("--predictor")
    sp.add_argument("--setting", choices=("composite", "sequential"))
    sp.add_argument("--algo", choices=("ppo", "dqn"))
    sp.add_argument("--steps", type=int)
    sp = sub.add_parser("eval-rl", parents=[common], help="optimality of a trained agent")
    sp.add_argument("--agent")
    sp.add_argument("--predictor")
    sp.add_argument("--evaluator", choices=("simulator", "predictor"))
    sp = sub.add_parser("codesign", parents=[common], help="RHNAS plus sequential and HW-aware NAS")
    for flag in ("--predictor", "--agent"):
        sp.add_argument(flag)
    sp.add_argument("--lam", type=float)
    sp = sub.add_parser("baseline", parents=[common], help="baselines and ablations")
    sp.add_argument("which", choices=("hwnas", "seq", "dshwnas", "exhaustive-hwgen", "perf-hwgen"))
    for flag in ("--predictor", "--agent", "--validnet"):
        sp.add_argument(flag)
    sp.add_argument("--lam", type=float)
    sp = sub.add_parser("study", parents=[common], help="surrogate probes")
    sp.add_argument("which", choices=("grad-interp", "pred-interp"))
    sp.add_argument("--validnet")
    sp.add_argument("--predictor")
    sp = sub.add_parser("report", parents=[common], help="summaries and SVG plots from run directories")
    sp.add_argument("runs", nargs="*")
    return p


FLAG_SETTINGS = {
    "dataset": ("data", "dataset"), "n": ("data", "n"), "metric": ("predictor", "metric"),
    "setting": ("rl", "setting"), "algo": ("rl", "algo"), "steps": ("rl", "steps"),
    "evaluator": ("rl", "evaluator"), "lam": ("codesign", "lam"),
}


def _settings(args) -> tuple[Settings, str | None]:
    s = Settings()
    text = s.load_file(args.config) if args.config else None
    s.apply_overrides(args.set)
    for flag, (sec, key) in FLAG_SETTINGS.items():
        s.set(sec, key, getattr(args, flag, None))
    if getattr(args, "epochs", None) is not None:
        s.set("predictor" if args.command == "train-pred" else "validnet", "epochs", args.epochs)
    if args.command == "gen-data" and args.kind == "validity" and args.n is not None:
        s.set("data", "validity_n", args.n)
    return s, text


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    args.seed_given = args.seed is not None
    args.seed = 0 if args.seed is None else args.seed
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from ..rlopt import TrainingDivergedError, UnsupportedSettingError
    try:
        settings, text = _settings(args)
        ct.set_build_jobs(args.jobs)
        run = Run(args, settings, text)
        COMMANDS[args.command](run)
        sub = args.command + (f"-{args.which}" if hasattr(args, "which") else "")
        run.finish(sub)
    except TrainingDivergedError as exc:
        print(f"error: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (CliError, ConfigError, CheckpointError, UnsupportedSettingError, hw.ConfigRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK
