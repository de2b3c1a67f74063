from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from terminaltables import AsciiTable

from async_tm import MultiClassTM, RegressionHead, TMConfig, fit, metrics
from async_tm.bench import bench_sweep, summarize, write_bench_csv
from async_tm.binarizer import (
    DEFAULT_BITS_PER_FEATURE,
    BinarizerSpec,
    apply_binarizer,
    fit_binarizer,
)
from async_tm.data_io import (
    CLASS_LABELS,
    REAL_LABELS,
    load_dense_binary,
    load_raw_csv,
    write_dense_binary,
)
from async_tm.datasets import (
    BIKE_SHARING_FEATURES,
    BIKE_SHARING_TARGET,
    fetch_bike_sharing,
    load_bike_sharing,
)
from async_tm.exceptions import (
    DatasetParseException,
    DatasetSchemaException,
    DownloadException,
    EmptyDatasetException,
    InvalidConfigException,
    ModelFormatException,
    TargetRangeException,
)
from async_tm.md5 import md5_file
from async_tm.model_file import load_model, save_model
from async_tm.synth import synth_clause_patterns, synth_staircase, synth_xor_split
from async_tm.trainer import MODES, PARALLEL, SEQUENTIAL
from .config import load_config, resolve_workers, write_config

LOGGER = logging.getLogger(__name__)

INPUT_ERRORS = (
    DatasetParseException,
    DatasetSchemaException,
    EmptyDatasetException,
    InvalidConfigException,
    ModelFormatException,
    TargetRangeException,
)

CLASSIFY = MultiClassTM.task
REGRESS = RegressionHead.task


@dataclass
class TypedObj:
    config_path: str
    config: TMConfig


@click.group()
@click.pass_context
@click.option(
    "--config-file", type=click.Path(exists=False), default="async-tm.conf.json"
)
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
def cli(ctx, config_file, verbose):
    logging.basicConfig()
    logging.getLogger("async_tm").setLevel(logging.DEBUG if verbose else logging.INFO)

    config = load_config(config_file)
    ctx.obj = TypedObj(config_path=config_file, config=config or TMConfig())


def tm_options(clauses: bool = True):
    """Hyperparameter flags; anything left out falls back to the config file."""

    def decorate(f):
        options = [
            click.option("--margin", "-T", type=int, help="Vote margin T."),
            click.option("--specificity", "-s", type=float, help="Specificity s."),
            click.option("--states", type=int, help="States per action (N)."),
            click.option("--boost/--no-boost", default=None),
            click.option("--epochs", type=int),
            click.option("--workers", type=int),
            click.option("--seed", type=int),
        ]
        if clauses:
            options.insert(0, click.option("--clauses", "-n", type=int))
        for option in reversed(options):
            f = option(f)
        return f

    return decorate


def effective_config(obj: TypedObj, **flags) -> TMConfig:
    flags["workers"] = resolve_workers(flags.get("workers"))
    if "states" in flags:
        flags["depth"] = flags.pop("states")
    if "boost" in flags:
        flags["boost_true_positive"] = flags.pop("boost")
    try:
        return obj.config.with_overrides(**flags).validate()
    except InvalidConfigException as e:
        raise click.UsageError(str(e))


def binarizer_path(model_path: str) -> str:
    return model_path + ".binarizer.json"


def _label_kind(task: str) -> str:
    return REAL_LABELS if task == REGRESS else CLASS_LABELS


def load_dataset(
    path: str,
    task: str,
    binarizer: Optional[BinarizerSpec] = None,
    bits: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, Optional[BinarizerSpec]]:
    """Dense binary files load as-is; CSV files go through a binarizer.

    A binarizer is fitted on this file when none is given.
    """
    kind = _label_kind(task)
    if not path.endswith(".csv"):
        X, y = load_dense_binary(path, label_kind=kind)
        return X, y, binarizer

    raw = load_raw_csv(path, label_kind=kind)
    if binarizer is None:
        binarizer = fit_binarizer(raw, bits or DEFAULT_BITS_PER_FEATURE)
    return apply_binarizer(binarizer, raw), raw.labels, binarizer


def build_model(
    task: str,
    config: TMConfig,
    X: np.ndarray,
    labels: List[np.ndarray],
    single_bank: bool,
):
    if task == REGRESS:
        everything = np.concatenate(labels)
        return RegressionHead(
            config, X.shape[1], float(everything.min()), float(everything.max())
        )
    classes = max(2, max(int(y.max()) for y in labels) + 1)
    return MultiClassTM(config, X.shape[1], classes, single_bank=single_bank)


def _fmt(value) -> str:
    return "-" if value is None else "{:.4f}".format(value)


@cli.command()
@click.pass_obj
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@tm_options()
@click.option("--task", type=click.Choice([CLASSIFY, REGRESS]), default=CLASSIFY)
@click.option("--mode", type=click.Choice(list(MODES)), default=SEQUENTIAL)
@click.option("--binarize-bits", type=int, help="Quantile bits per CSV column.")
@click.option("--test", "test_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
@click.option("--stop-at", type=float, help="Stop once the train metric reaches this.")
@click.option("--single-bank", is_flag=True, help="One bank for a binary task.")
@click.option("--out", type=click.Path(dir_okay=False), default="model.json")
def train(
    obj: TypedObj,
    dataset,
    task,
    mode,
    binarize_bits,
    test_path,
    report_path,
    stop_at,
    single_bank,
    out,
    **flags,
):
    config = effective_config(obj, **flags)
    try:
        X, y, binarizer = load_dataset(dataset, task, bits=binarize_bits)
        test = None
        if test_path is not None:
            X_test, y_test, _ = load_dataset(test_path, task, binarizer=binarizer)
            test = (X_test, y_test)
        labels = [y] if test is None else [y, test[1]]
        model = build_model(task, config, X, labels, single_bank)
        pool = model.new_pool(X, y)
    except INPUT_ERRORS as e:
        raise click.UsageError(str(e))

    reports = fit(
        model, pool, mode=mode, workers=config.workers, test=test, stop_when=stop_at
    )

    save_model(out, model)
    if binarizer is not None:
        with open(binarizer_path(out), "w") as fh:
            fh.write(binarizer.to_json())
    if report_path is not None:
        pd.DataFrame([r.serialize() for r in reports]).to_csv(report_path, index=False)

    table_data = [["epoch", "seconds", "train " + model.metric_name, "test"]]
    for r in reports:
        table_data.append(
            [
                r.epoch,
                "{:.3f}".format(r.duration),
                _fmt(r.train_metric),
                _fmt(r.test_metric),
            ]
        )
    print(AsciiTable(table_data).table)
    click.echo("Model written to {} (md5 {})".format(out, md5_file(out)))


@cli.command(name="eval")
@click.pass_obj
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--binarizer", "binarizer_file", type=click.Path(dir_okay=False))
@click.option("--vote-sums", type=click.Path(dir_okay=False), help="CSV of class sums.")
@click.option("--show-clauses", is_flag=True)
def evaluate(
    obj: TypedObj, model_path, dataset, binarizer_file, vote_sums, show_clauses
):
    try:
        model = load_model(model_path)
        binarizer = None
        binarizer_file = binarizer_file or binarizer_path(model_path)
        if os.path.exists(binarizer_file):
            with open(binarizer_file, "r") as fh:
                binarizer = BinarizerSpec.from_json(fh.read())
        elif dataset.endswith(".csv"):
            # thresholds must come from the training split
            raise click.UsageError(
                "no binarizer record at {} for {}".format(binarizer_file, dataset)
            )
        X, y, _ = load_dataset(dataset, model.task, binarizer=binarizer)
        if X.shape[1] != model.number_of_features:
            raise DatasetSchemaException(
                "model expects {} features, {} has {}".format(
                    model.number_of_features, dataset, X.shape[1]
                )
            )
    except INPUT_ERRORS as e:
        raise click.UsageError(str(e))

    results = metrics(model.predict(X), y, model.task)
    table_data = [["metric", "value"]]
    for name, value in results.items():
        table_data.append([name, "{:.4f}".format(value)])
    print(AsciiTable(table_data).table)

    if vote_sums is not None:
        sums = model.vote_sum_matrix(X)
        columns = ["class_{}".format(c) for c in range(sums.shape[1])]
        pd.DataFrame(sums, columns=columns).to_csv(vote_sums, index=False)
        click.echo("Vote sums written to {}".format(vote_sums))

    if show_clauses:
        for line in model.describe():
            click.echo(line)


def parse_counts(ctx, param, value) -> List[int]:
    try:
        counts = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma separated integers, got " + value)
    if not counts:
        raise click.BadParameter("at least one clause count is required")
    return counts


@cli.command()
@click.pass_obj
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--clauses", callback=parse_counts, default="20,80,320,1280", show_default=True
)
@tm_options(clauses=False)
@click.option(
    "--mode", type=click.Choice([SEQUENTIAL, PARALLEL, "both"]), default="both"
)
@click.option("--samples", type=int, default=2000, help="Synthetic pool size.")
@click.option("--out", type=click.Path(dir_okay=False), default="bench.csv")
def bench(obj: TypedObj, dataset, clauses, mode, samples, out, **flags):
    if flags.get("epochs") is None:
        flags["epochs"] = 4
    config = effective_config(obj, **flags)
    try:
        if dataset is None:
            X, y = synth_clause_patterns(samples, seed=config.seed)
        else:
            X, y, _ = load_dataset(dataset, CLASSIFY)
        for n in clauses:
            config.with_overrides(clauses=n).validate()
    except INPUT_ERRORS as e:
        raise click.UsageError(str(e))

    modes = list(MODES) if mode == "both" else [mode]
    records = bench_sweep(X, y, config, clauses, modes, epochs=config.epochs)
    write_bench_csv(out, records)

    table_data = [["mode", "workers", "clauses", "s/epoch", "metric"]]
    for s in summarize(records):
        table_data.append(
            [
                s.mode,
                s.workers,
                s.clauses,
                "{:.4f}".format(s.seconds_per_epoch),
                "{} {:.4f}".format(s.metric_name, s.metric_value),
            ]
        )
    print(AsciiTable(table_data).table)
    click.echo("Bench records written to {}".format(out))


@cli.command()
@click.argument("kind", type=click.Choice(["xor", "patterns", "staircase"]))
@click.option("--samples", "-q", type=int, default=1000)
@click.option("--noise", type=float, default=0.0)
@click.option("--features", type=int, help="Feature count (patterns, staircase).")
@click.option("--classes", type=int, default=4)
@click.option("--seed", type=int, default=1)
@click.option("--test-samples", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--test-out", type=click.Path(dir_okay=False))
def synth(kind, samples, noise, features, classes, seed, test_samples, out, test_out):
    header = [
        "generator {} samples={} noise={} seed={}".format(kind, samples, noise, seed)
    ]
    try:
        if kind == "xor":
            X, y, X_test, y_test = synth_xor_split(samples, test_samples, noise, seed)
        elif kind == "patterns":
            width = features or 20
            X, y = synth_clause_patterns(samples, width, classes, noise, seed)
            # test rows come from a different seed and carry no label noise
            X_test, y_test = synth_clause_patterns(
                test_samples, width, classes, 0.0, seed + 1
            )
        else:
            X, y = synth_staircase(samples, features or 6, seed)
            X_test, y_test = synth_staircase(test_samples, features or 6, seed + 1)
    except InvalidConfigException as e:
        raise click.BadParameter(str(e))

    write_dense_binary(out, X, y, header)
    click.echo("Wrote {} examples to {}".format(X.shape[0], out))
    if test_out is not None and test_samples > 0:
        write_dense_binary(test_out, X_test, y_test, header + ["noise-free test split"])
        click.echo("Wrote {} examples to {}".format(X_test.shape[0], test_out))


@cli.command()
@click.option("--dest", type=click.Path(file_okay=False), default="data")
def fetch(dest):
    try:
        fetch_bike_sharing(dest)
        raw = load_bike_sharing(dest)
    except DownloadException as e:
        raise click.ClickException(str(e))

    frame = pd.DataFrame(raw.features, columns=BIKE_SHARING_FEATURES)
    frame[BIKE_SHARING_TARGET] = raw.labels
    path = os.path.join(dest, "bike_sharing.csv")
    frame.to_csv(path, index=False)
    click.echo("Wrote {} rows to {}".format(raw.size, path))


@cli.command()
@click.pass_obj
@tm_options()
def configure(obj: TypedObj, **flags):
    obj.config = effective_config(obj, **flags)
    write_config(obj.config_path, obj.config)

    table_data = [["setting", "value"]]
    for key, value in obj.config.serialize().items():
        table_data.append([key, value])
    print(AsciiTable(table_data).table)


def run_cli(args: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=args, prog_name="async-tm")
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(run_cli())
