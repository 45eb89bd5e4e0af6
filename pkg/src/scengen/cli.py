"""Command-line front end.

Subcommands: make-dataset, train, eval, generate, classify, compare.
Every stochastic command takes a mandatory --seed and rerunning with
identical flags reproduces the data outputs byte-for-byte (timestamps
live only in the manifest written next to each run's outputs).

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import TwoModelClassifier, write_classification_report
from .errors import AlphabetMismatchError, InputError, ScengenError, TrainingError
from .hmm import CategoricalHmm, baum_welch_fit, hmm_sample
from .metrics import average_da, write_da_report
from .psa import (SystemModel, apply_event, build_datasets, decode_scenario,
                  load_dataset)
from .qhmm import KrausModel, qhmm_sample, validate_kraus
from .serialization import load_model, save_model
from .trainer import TrainConfig, TrainRecord, train_qhmm, write_training_log


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, args, inputs, outputs,
                    started_wall: str, started_clock: float) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", getattr(args, "seeds", None)),
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "started_at": started_wall,
        "duration_seconds": time.perf_counter() - started_clock,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _split_filter(split: str):
    return None if split == "all" else split


def _check_alphabet(sequences, alphabet_size: int) -> None:
    top = max((max(s) for s in sequences if len(s) > 0), default=-1)
    if top >= alphabet_size:
        raise AlphabetMismatchError(
            f"data uses symbol {top} but the model alphabet has size {alphabet_size}")


def _train_one(kind: str, sequences, alphabet_size: int, args, seed: int):
    """Train one model of the requested kind; returns (model, loss records)."""
    if kind == "qhmm":
        config = TrainConfig(dim=args.K, learning_rate=args.lr, decay=args.decay,
                             num_batches=args.batches, epochs=args.epochs,
                             multiplicity=args.mu, seed=seed)
        return train_qhmm(sequences, config, alphabet_size)
    result = baum_welch_fit(sequences, args.K, alphabet_size=alphabet_size,
                            max_iters=args.epochs, tol=args.tol, seed=seed)
    records = [TrainRecord(i, 0, -ll / len(sequences), 0.0)
               for i, ll in enumerate(result.log_likelihoods)]
    return result.model, records


def cmd_make_dataset(args) -> int:
    started, clock = _now(), time.perf_counter()
    system = SystemModel.load(args.system)
    out = _out_dir(args)
    build_datasets(system, max_len=args.max_len, p_min=args.p_min,
                   test_fraction=args.test_fraction, seed=args.seed,
                   out_dir=out)
    outputs = [out / "probable.jsonl", out / "no_probable.jsonl"]
    _write_manifest(out, "make-dataset", args, [args.system], outputs, started, clock)
    return 0


def cmd_train(args) -> int:
    started, clock = _now(), time.perf_counter()
    data = load_dataset(args.data, alphabet_size=args.alphabet_size)
    sequences = data.sequences(_split_filter(args.split))
    if not sequences:
        raise InputError(f"no sequences in split {args.split!r} of {args.data}")
    out = _out_dir(args)
    model_path, loss_path = out / "model.json", out / "loss.csv"
    try:
        model, records = _train_one(args.kind, sequences, data.alphabet_size,
                                    args, args.seed)
        if isinstance(model, KrausModel) and not validate_kraus(model).passes:
            raise TrainingError("trained model fails the completeness check")
        save_model(model, model_path)
        write_training_log(loss_path, records)
    except Exception:
        for path in (model_path, loss_path):
            path.unlink(missing_ok=True)
        raise
    _write_manifest(out, "train", args, [args.data], [model_path, loss_path],
                    started, clock)
    return 0


def cmd_eval(args) -> int:
    started, clock = _now(), time.perf_counter()
    model = load_model(args.model)
    data = load_dataset(args.data)
    sequences = data.sequences(_split_filter(args.split))
    if not sequences:
        raise InputError(f"no sequences in split {args.split!r} of {args.data}")
    _check_alphabet(sequences, model.alphabet_size)
    out = _out_dir(args)
    report = out / "report.csv"
    mean = write_da_report(report, model, sequences)
    print(f"mean_da {mean!r}")
    _write_manifest(out, "eval", args, [args.model, args.data], [report],
                    started, clock)
    return 0


def cmd_generate(args) -> int:
    started, clock = _now(), time.perf_counter()
    model = load_model(args.model)
    if args.count < 0:
        raise InputError("count must be >= 0")
    prefix = tuple(int(s) for s in args.prefix.split(",") if s != "")
    system = SystemModel.load(args.system) if args.system else None
    # generated sequences continue the prefix, so step decoding starts from
    # the system state the prefix walks to (all-up when there is none)
    decode_start = 0
    if system is not None and prefix:
        try:
            state = 0
            for idx, action in decode_scenario(system, prefix):
                state = apply_event(state, idx, action)
            decode_start = state
        except InputError as exc:
            print(f"warning: prefix is not a legal walk ({exc}); "
                  "decoding from the all-up state", file=sys.stderr)
    sample = hmm_sample if isinstance(model, CategoricalHmm) else qhmm_sample
    rng = np.random.default_rng(args.seed)
    out = _out_dir(args)
    path = out / "sequences.jsonl"
    with open(path, "w") as fh:
        for i in range(args.count):
            sequence = sample(model, args.length, rng, prefix=prefix)
            payload = {"sequence": sequence}
            if system is not None:
                try:
                    steps = decode_scenario(system, sequence,
                                            initial_state=decode_start)
                    payload["steps"] = [[system.events[idx].id, action]
                                        for idx, action in steps]
                except InputError as exc:
                    print(f"warning: sequence {i} does not decode: {exc}",
                          file=sys.stderr)
                    payload["steps"] = None
            fh.write(json.dumps(payload) + "\n")
    inputs = [args.model] + ([args.system] if args.system else [])
    _write_manifest(out, "generate", args, inputs, [path], started, clock)
    return 0


def cmd_classify(args) -> int:
    started, clock = _now(), time.perf_counter()
    clf = TwoModelClassifier(load_model(args.model_probable),
                             load_model(args.model_no_probable))
    data = load_dataset(args.data)
    pairs = data.labeled(_split_filter(args.split))
    if not pairs:
        raise InputError(f"no sequences in split {args.split!r} of {args.data}")
    _check_alphabet([seq for seq, _ in pairs], clf.alphabet_size)
    out = _out_dir(args)
    report = out / "report.csv"
    accuracy = write_classification_report(report, clf, pairs)
    if accuracy is not None:
        print(f"accuracy {accuracy!r}")
    _write_manifest(out, "classify", args,
                    [args.model_probable, args.model_no_probable, args.data],
                    [report], started, clock)
    return 0


def cmd_compare(args) -> int:
    started, clock = _now(), time.perf_counter()
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    if not seeds:
        raise InputError("at least one seed is required")
    out = _out_dir(args)
    rows = []
    for data_path in args.data:
        data = load_dataset(data_path)
        train_seqs = data.sequences("train")
        test_seqs = data.sequences("test")
        if not train_seqs or not test_seqs:
            raise InputError(f"{data_path}: both train and test splits are required")
        for kind in ("hmm", "qhmm"):
            per_split = {"train": [], "test": []}
            failed = False
            for seed in seeds:
                try:
                    model, _ = _train_one(kind, train_seqs, data.alphabet_size,
                                          args, seed)
                except TrainingError as exc:
                    print(f"warning: {kind} training failed on {data_path} "
                          f"(seed {seed}): {exc}", file=sys.stderr)
                    failed = True
                    break
                per_split["train"].append(average_da(model, train_seqs))
                per_split["test"].append(average_da(model, test_seqs))
            for split in ("train", "test"):
                if failed:
                    rows.append([str(data_path), kind, split, "failed", "failed"])
                else:
                    values = np.asarray(per_split[split])
                    rows.append([str(data_path), kind, split,
                                 repr(float(values.mean())),
                                 repr(float(values.std()))])
    path = out / "comparison.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "model_kind", "split", "mean_da", "std_da"])
        writer.writerows(rows)
    _write_manifest(out, "compare", args, list(args.data), [path], started, clock)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scengen",
        description="Learn and use generative models of failure scenarios.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset",
                       help="enumerate a system and write labeled scenario datasets")
    p.add_argument("--system", required=True, help="system JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--p-min", type=float, default=1e-3)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("train", help="fit a model to a dataset split")
    p.add_argument("--kind", choices=("hmm", "qhmm"), required=True)
    p.add_argument("--data", required=True, help="dataset JSONL path")
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="train")
    p.add_argument("--K", type=int, required=True, help="hidden dimension")
    p.add_argument("--mu", type=int, default=1, help="Kraus operators per symbol")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--batches", type=int, default=5)
    p.add_argument("--epochs", type=int, default=100,
                   help="epochs (qhmm) or EM iterations (hmm)")
    p.add_argument("--tol", type=float, default=1e-6, help="EM stopping tolerance")
    p.add_argument("--alphabet-size", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a dataset and write a DA report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="sample sequences from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--prefix", default="",
                   help="comma-separated symbols of the event history to "
                        "condition on (filters the belief before sampling)")
    p.add_argument("--system", default=None,
                   help="system JSON; when given, sequences are decoded "
                        "into event/action steps")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("classify", help="apply a two-model classifier to a dataset")
    p.add_argument("--model-probable", required=True)
    p.add_argument("--model-no-probable", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("compare",
                       help="train both model kinds on each dataset and tabulate mean DA")
    p.add_argument("--data", action="append", required=True,
                   help="dataset JSONL path (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--batches", type=int, default=5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScengenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
