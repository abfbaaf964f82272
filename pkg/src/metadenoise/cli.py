"""Command-line surface.

Subcommands: synth-data, meta-train, pretrain, finetune, transfer,
evaluate, kshot-sweep, compare. Every command takes --config plus the
overrides --seed, --out, and --k. Exit codes: 0 success, 1 usage error,
2 data/format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_config
from .datasets import save_signal_dataset, write_pgm
from .errors import ConfigError, NumericError
from .evaluation import (
    compare_methods,
    evaluate_on_test,
    initial_noise_result,
    kshot_sweep,
    method_trainer,
)
from .experiment import build_problem
from .nets import DenoiserModel, init_params
from .report import emit_metric_result, emit_report, emit_sweep, emit_train_log, format_real
from .rng import RngStream
from .tasks import generate_phantoms, generate_signals, split_real
from .training import fine_tune, meta_train, train_supervised, transfer_learn

LOCK_NAME = ".metadenoise-lock"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through exceptions so run_cli
    can map them to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or f"{self.prog}: error")
        # --help lands here; let it terminate normally
        raise SystemExit(0)


def build_parser() -> _Parser:
    parser = _Parser(prog="metadenoise", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("synth-data", "write the built-in synthetic clean dataset"),
        ("meta-train", "meta-train a denoiser and save a checkpoint"),
        ("pretrain", "supervised training on pooled synthetic data"),
        ("finetune", "fine-tune a checkpoint on the real k-shot pairs"),
        ("transfer", "pretrain then fine-tune"),
        ("evaluate", "evaluate a checkpoint on the real test split"),
        ("kshot-sweep", "sweep the number of fine-tuning shots"),
        ("compare", "compare supervised/transfer/meta with significance tests"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--config", required=True, help="experiment config file")
        sub.add_argument("--seed", type=int, default=None, help="override base_seed")
        sub.add_argument("--out", default=None, help="override the output directory")
        sub.add_argument("--k", type=int, default=None, help="override the shot count k")
    return parser


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.k is not None:
        if args.k < 1:
            raise UsageError(f"--k must be >= 1, got {args.k}")
        config = replace(config, k=args.k)
    if args.out is not None:
        config = replace(config, out=args.out)
    return config


@contextmanager
def _locked_out_dir(config: ExperimentConfig):
    """Single-writer output directory; concurrent runs must use distinct
    directories."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    try:
        handle = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory {out} is in use (stale lock? remove {lock})"
        ) from None
    os.close(handle)
    try:
        yield out
    finally:
        lock.unlink(missing_ok=True)


def _cmd_synth_data(config: ExperimentConfig) -> int:
    with _locked_out_dir(config) as out:
        stream = RngStream(config.base_seed, ("problem", "clean"))
        if config.problem == "signal1d":
            signals = generate_signals(config.data_count, config.data_signal_length, stream)
            save_signal_dataset(out / "signals.csv", signals)
        else:
            images = generate_phantoms(config.data_count, config.data_image_size, stream)
            image_dir = out / "images"
            image_dir.mkdir(exist_ok=True)
            for i, image in enumerate(images):
                write_pgm(image_dir / f"phantom_{i:03d}.pgm", image)
        print(f"wrote synthetic {config.problem} data to {out}")
    return 0


def _split_for(config: ExperimentConfig, problem):
    root = RngStream(config.base_seed)
    return root, split_real(problem.real_pairs, config.k, root.child("split"))


def _cmd_meta_train(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    with _locked_out_dir(config) as out:
        model = DenoiserModel(problem.net, init_params(problem.net, config.base_seed))
        model, log = meta_train(model, problem.dist, problem.clean_pool, problem.meta)
        save_checkpoint(model, out / "model_meta.mdnz")
        emit_train_log(log, out)
        print(f"meta-trained over {problem.meta.total_tasks} tasks -> {out / 'model_meta.mdnz'}")
    return 0


def _cmd_pretrain(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    with _locked_out_dir(config) as out:
        model = DenoiserModel(problem.net, init_params(problem.net, config.base_seed))
        losses: list[float] = []
        model = train_supervised(
            model,
            problem.dist,
            problem.clean_pool,
            problem.supervised_budget,
            problem.meta.inner,
            stream=RngStream(config.base_seed).child("traindata"),
            k_per_task=problem.k,
            epoch_losses=losses,
        )
        save_checkpoint(model, out / "model_supervised.mdnz")
        _write_losses(out / "pretrain_loss.csv", losses)
        print(f"pretrained on {problem.supervised_budget} pairs -> {out / 'model_supervised.mdnz'}")
    return 0


def _write_losses(path: Path, losses) -> None:
    lines = ["epoch,loss"] + [f"{i},{format_real(v)}" for i, v in enumerate(losses)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _require_model(config: ExperimentConfig) -> DenoiserModel:
    if not config.model_path:
        raise ConfigError("model.path: required for this command")
    return load_checkpoint(config.model_path)


def _cmd_finetune(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    model = _require_model(config)
    with _locked_out_dir(config) as out:
        root, split = _split_for(config, problem)
        losses: list[float] = []
        model = fine_tune(
            model, split, problem.meta.inner, stream=root.child("finetune"), epoch_losses=losses
        )
        save_checkpoint(model, out / "model_finetuned.mdnz")
        _write_losses(out / "finetune_loss.csv", losses)
        print(f"fine-tuned on k={config.k} pairs -> {out / 'model_finetuned.mdnz'}")
    return 0


def _cmd_transfer(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    with _locked_out_dir(config) as out:
        model = DenoiserModel(problem.net, init_params(problem.net, config.base_seed))
        root, split = _split_for(config, problem)
        model, pre_losses, ft_losses = transfer_learn(
            model,
            problem.dist,
            problem.clean_pool,
            problem.supervised_budget,
            split,
            problem.meta.inner,
            problem.meta.inner,
            stream=root.child("traindata"),
            k_per_task=problem.k,
        )
        save_checkpoint(model, out / "model_transfer.mdnz")
        _write_losses(out / "pretrain_loss.csv", pre_losses)
        _write_losses(out / "finetune_loss.csv", ft_losses)
        print(f"transfer-trained -> {out / 'model_transfer.mdnz'}")
    return 0


def _cmd_evaluate(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    model = _require_model(config)
    if model.spec != problem.net:
        raise ConfigError("model.path: checkpoint architecture does not match the configured net")
    with _locked_out_dir(config) as out:
        _, split = _split_for(config, problem)
        result = evaluate_on_test(model, split, problem.metric, problem.max_val)
        initial = initial_noise_result(split, problem.metric, problem.max_val)
        emit_metric_result(result, initial, problem.metric, out)
        print(
            f"{problem.metric.upper()}: model {result.mean:.2f} dB vs initial "
            f"{initial.mean:.2f} dB over {result.count} test samples"
        )
    return 0


def _cmd_kshot_sweep(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    with _locked_out_dir(config) as out:
        rows = kshot_sweep(
            method_trainer(config.sweep_method), config.sweep_ks, config.seeds, problem
        )
        emit_sweep(rows, problem.metric, out)
        for row in rows:
            print(f"k={row.k}: {row.mean:.2f} +/- {row.sd:.2f} dB")
    return 0


def _cmd_compare(config: ExperimentConfig) -> int:
    problem = build_problem(config)
    with _locked_out_dir(config) as out:
        report = compare_methods(problem, config.methods, config.seeds)
        emit_report(report, out)
        print((out / "report_table.txt").read_text(encoding="utf-8"))
    return 0


_COMMANDS = {
    "synth-data": _cmd_synth_data,
    "meta-train": _cmd_meta_train,
    "pretrain": _cmd_pretrain,
    "finetune": _cmd_finetune,
    "transfer": _cmd_transfer,
    "evaluate": _cmd_evaluate,
    "kshot-sweep": _cmd_kshot_sweep,
    "compare": _cmd_compare,
}


def run_cli(argv) -> int:
    """Parse argv and run one subcommand, mapping failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load(args)
        return _COMMANDS[args.command](config)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    raise SystemExit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
