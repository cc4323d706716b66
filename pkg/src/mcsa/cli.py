"""Command-line entry point.

Exit status: 0 success, 2 usage/config errors, 3 file format errors,
4 numeric failures (including a failed gradcheck).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datakit import SynthSpec, generate_synthetic, load_manifest, read_feature
from .datakit.splits import MODES, plan_split, protocol_class_names
from .errors import ConfigError, FormatError, NumericError, ProtocolError
from .gradcheck import run_gradcheck
from .modelio import load_model, save_model
from .stream import predict
from .trainer import TrainConfig, evaluate, train_lower, train_upper
from .transfer import snapshot

GRADCHECK_TOLERANCE = 1e-4

_TRAIN_DEFAULTS = TrainConfig()
# key -> (type, default, help); shared by the training commands
TRAIN_OPTIONS = {
    "learning_rate": (float, _TRAIN_DEFAULTS.learning_rate, "initial SGD learning rate"),
    "weight_decay": (float, _TRAIN_DEFAULTS.weight_decay, "L2 weight decay applied every step"),
    "lr_decay_every": (int, _TRAIN_DEFAULTS.lr_decay_every, "iterations between lr decays"),
    "lr_decay_factor": (float, _TRAIN_DEFAULTS.lr_decay_factor, "lr multiplier per decay (1 = off)"),
    "batch_size": (int, _TRAIN_DEFAULTS.batch_size, "samples per SGD step"),
    "max_iterations": (int, _TRAIN_DEFAULTS.max_iterations, "SGD steps"),
    "a": (int, _TRAIN_DEFAULTS.a, "spatial attention hidden size"),
    "b": (int, _TRAIN_DEFAULTS.b, "temporal attention hidden size"),
}
UPPER_OPTIONS = {
    "lambda_mmd": (float, _TRAIN_DEFAULTS.lambda_mmd, "weight of the MMD transfer loss"),
    "lambda_reg": (float, _TRAIN_DEFAULTS.lambda_reg, "weight of the attention penalty"),
}
SYNTH_OPTIONS = {
    "k": (int, 5, "number of classes"),
    "videos_per_class": (int, 50, "videos per class"),
    "s": (int, 32, "spatial feature size"),
    "t": (int, 32, "temporal feature size"),
    "G": (int, 16, "frames per video"),
    "snr": (float, 2.0, "prototype amplitude over unit noise"),
    "rho": (float, 1.0, "fraction of frames carrying signal (1 = trimmed)"),
}
COMMON_OPTIONS = {
    "seed": (int, 0, "random seed"),
    "jobs": (int, 1, "threads for intra-batch gradients (result is independent of this)"),
}


def _add_options(parser, options):
    for key, (typ, default, text) in options.items():
        parser.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None,
                            help=f"{text} (default: {default})")


def _resolve(args, options) -> dict:
    """flags > config file > defaults."""
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must be a flat JSON object")
    out = {}
    for key, (typ, default, _) in options.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in file_values:
            out[key] = typ(file_values[key])
        else:
            out[key] = default
    return out


def _train_config(args, extra=None, **overrides) -> TrainConfig:
    values = _resolve(args, {**TRAIN_OPTIONS, **COMMON_OPTIONS, **(extra or {})})
    values.update(overrides)
    return TrainConfig(**values)


def _load_data(path):
    manifest = load_manifest(path)
    return manifest, manifest.load_samples()


def _write_outputs(args, model, report, classes):
    save_model(args.model_out, model, classes)
    if args.report_out:
        Path(args.report_out).write_text(report.to_json())
    print(json.dumps({"final_train_acc": report.final_train_acc,
                      "final_val_acc": report.final_val_acc,
                      "wall_seconds": round(report.wall_seconds, 3)}))


def cmd_gen_synth(args):
    values = _resolve(args, {**SYNTH_OPTIONS, "seed": COMMON_OPTIONS["seed"]})
    spec = SynthSpec(seed=values.pop("seed"), prototype_seed=args.prototype_seed, **values)
    manifest = generate_synthetic(spec, args.out)
    print(f"wrote {len(manifest.records)} samples to {Path(args.out) / 'manifest.json'}")


def cmd_train_trimmed(args):
    manifest, data = _load_data(args.manifest)
    val = _load_data(args.val_manifest)[1] if args.val_manifest else None
    model, report = train_lower(data, _train_config(args), val=val, k=manifest.k)
    _write_outputs(args, model, report, manifest.classes)


def cmd_train_untrimmed(args):
    manifest, data = _load_data(args.manifest)
    val = _load_data(args.val_manifest)[1] if args.val_manifest else None
    lower, _ = load_model(args.lower_model)
    config = _train_config(args, UPPER_OPTIONS, init_from_snapshot=args.init_from_snapshot)
    model, report = train_upper(data, snapshot(lower), config, val=val, k=manifest.k)
    _write_outputs(args, model, report, manifest.classes)


def cmd_eval(args):
    model, _ = load_model(args.model)
    _, data = _load_data(args.manifest)
    print(f"{evaluate(model, data):.6f}")


def cmd_predict(args):
    model, classes = load_model(args.model)
    label = predict(model, read_feature(args.feature))
    print(classes[label] if classes else label)


def cmd_split_plan(args):
    seed = _resolve(args, {"seed": COMMON_OPTIONS["seed"]})["seed"]
    trimmed, seen, unseen = protocol_class_names(args.n_trimmed, args.n_seen, args.n_unseen)
    plan = plan_split(trimmed, seen, unseen, args.mode, seed)
    print(json.dumps({"mode": plan.mode, "per_class": args.per_class,
                      "buckets": plan.counts(args.per_class)}, indent=1))


def cmd_gradcheck(args):
    seed = _resolve(args, {"seed": COMMON_OPTIONS["seed"]})["seed"]
    errors = run_gradcheck(seed)
    worst = max(errors.values())
    for name, err in errors.items():
        print(f"{name}: {err:.3e}")
    print(f"max relative error: {worst:.3e}")
    if not worst <= GRADCHECK_TOLERANCE:
        raise NumericError(f"gradient check failed: {worst:.3e} > {GRADCHECK_TOLERANCE:g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcsa", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING", help="logging level (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat JSON file of option defaults (default: none)")
        p.set_defaults(func=func)
        return p

    p = command("gen-synth", cmd_gen_synth, "write a synthetic feature dataset and manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--prototype-seed", type=int, default=None,
                   help="seed for class prototypes, to share them across datasets (default: --seed)")
    _add_options(p, SYNTH_OPTIONS)
    _add_options(p, {"seed": COMMON_OPTIONS["seed"]})

    for name, func, text in (("train-trimmed", cmd_train_trimmed, "phase 1: train the lower stream"),
                             ("train-untrimmed", cmd_train_untrimmed,
                              "phase 2: train the upper stream against a lower-model snapshot")):
        p = command(name, func, text)
        p.add_argument("--manifest", required=True, help="training manifest")
        p.add_argument("--val-manifest", help="held-out manifest (default: none)")
        p.add_argument("--model-out", required=True, help="model file to write")
        p.add_argument("--report-out", help="TrainReport JSON to write (default: none)")
        _add_options(p, TRAIN_OPTIONS)
        _add_options(p, COMMON_OPTIONS)
        if name == "train-untrimmed":
            p.add_argument("--lower-model", required=True, help="trained lower-stream model file")
            p.add_argument("--init-from-snapshot", action="store_true",
                           help="start from the lower stream's classifier parameters (default: off)")
            _add_options(p, UPPER_OPTIONS)

    p = command("eval", cmd_eval, "print accuracy of a model on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)

    p = command("predict", cmd_predict, "print the predicted class of one feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--feature", required=True)

    p = command("split-plan", cmd_split_plan, "print TD / G / TD+G bucket counts as JSON")
    p.add_argument("--mode", choices=MODES, default="td+g", help="split protocol (default: td+g)")
    p.add_argument("--per-class", type=int, default=10, help="samples per class (default: 10)")
    p.add_argument("--n-trimmed", type=int, default=30, help="trimmed classes (default: 30)")
    p.add_argument("--n-seen", type=int, default=20, help="untrimmed seen classes (default: 20)")
    p.add_argument("--n-unseen", type=int, default=51, help="untrimmed unseen classes (default: 51)")
    _add_options(p, {"seed": COMMON_OPTIONS["seed"]})

    p = command("gradcheck", cmd_gradcheck,
                "finite-difference check of every loss on a tiny random model")
    _add_options(p, {"seed": COMMON_OPTIONS["seed"]})
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, ProtocolError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
