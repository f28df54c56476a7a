"""Training, evaluation, and sweep CLI."""

import logging
import pathlib
from typing import Any, Callable, TypeVar

import click

from .. import backend, utils
from ..config import RunProfile, load_profile, parse_field
from ..data.batch import split_conversations
from ..data.jsonl import load_jsonl
from ..data.records import Conversation, DatasetMeta
from ..errors import ConfigError
from .checkpoint import load_checkpoint, save_checkpoint
from .sweep import AXES, ablation_sweep
from .trainer import evaluate_checkpoint, train as _train

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

_F = TypeVar("_F", bound=Callable[..., Any])

_PATH = click.Path(dir_okay=False, path_type=pathlib.Path)

_Run = tuple[
    RunProfile, DatasetMeta, list[Conversation], list[Conversation], list[Conversation]
]

#: Options overriding profile values, as (flag, config field, type, help).
_OVERRIDES = [
    ("--d-model", "d_model", int, "Common model width D."),
    ("--heads", "heads", int, "Attention heads."),
    ("--mdgat-layers", "mdgat_layers", int, "Graph-attention layers L."),
    ("--mpcat-layers", "mpcat_layers", int, "Cross-modal attention layers K."),
    ("--window", "window", str, "Past and future window sizes as `J,K`."),
    ("--speaker-weight", "speaker_weight", float, "Speaker embedding weight lambda."),
    ("--update-rule", "update_rule", str, "Sum, Concat, or SumProduct."),
    ("--modalities", "modalities", str, "Modalities to use (e.g., `tav`, `ta`)."),
    ("--dropout", "dropout", float, "Dropout rate."),
    ("--lr", "lr", float, "AdamW learning rate."),
    ("--weight-decay", "weight_decay", float, "AdamW decoupled weight decay."),
    ("--batch-size", "batch_size", int, "Conversations per optimizer step."),
    ("--max-epochs", "max_epochs", int, "Maximum training epochs."),
    ("--patience", "patience", int, "Non-improving epochs before stopping early."),
    ("--seed", "seed", int, "Seed for initialization, shuffling, and dropout."),
    ("--clip-norm", "clip_norm", float, "Clip gradients to this global norm."),
]


def _run_options(fn: _F) -> _F:
    """Attach the profile, data path, and config override options."""
    for flag, name, type_, help_ in reversed(_OVERRIDES):
        fn = click.option(flag, name, type=type_, default=None, help=help_)(fn)
    fn = click.option(
        "--test", "test_path", type=_PATH, default=None, help="Test dataset (JSONL)."
    )(fn)
    fn = click.option(
        "--valid",
        "valid_path",
        type=_PATH,
        default=None,
        help=(
            "Validation dataset (JSONL). Without one, the training dataset is "
            "split 80/10/10 into training, validation, and test conversations."
        ),
    )(fn)
    fn = click.option(
        "--train",
        "train_path",
        type=_PATH,
        default=None,
        help="Training dataset (JSONL).",
    )(fn)
    fn = click.option(
        "--profile",
        "-p",
        default="iemocap",
        show_default=True,
        help="Bundled profile name (`iemocap`, `meld`) or path to a profile file.",
    )(fn)
    return fn


def _resolve_run(
    profile: str, overrides: dict[str, Any], paths: dict[str, None | pathlib.Path]
) -> _Run:
    parsed = {
        k: parse_field(k, v) if isinstance(v, str) else v
        for k, v in overrides.items()
        if v is not None
    }
    run = load_profile(profile, **parsed)
    given = {k: v.resolve() for k, v in paths.items() if v is not None}
    resolved = {**run.paths, **given}
    if "train_path" not in resolved:
        raise ConfigError(
            "no training dataset given (use --train or a profile `train_path`)"
        )
    meta, train_set = load_jsonl(resolved["train_path"])
    valid_set: list[Conversation] = []
    test_set: list[Conversation] = []
    if "valid_path" in resolved:
        valid_meta, valid_set = load_jsonl(resolved["valid_path"])
        _check_same(meta, valid_meta, resolved["valid_path"])
    else:
        train_set, valid_set, test_set = split_conversations(
            train_set, seed=run.config.seed
        )
        logger.info(
            f"Split {resolved['train_path']} into {len(train_set)}/{len(valid_set)}/"
            f"{len(test_set)} train/valid/test conversations"
        )
    if "test_path" in resolved:
        test_meta, test_set = load_jsonl(resolved["test_path"])
        _check_same(meta, test_meta, resolved["test_path"])
    run = RunProfile(config=run.config, paths=resolved)
    return run, meta, train_set, valid_set, test_set


def _check_same(meta: DatasetMeta, other: DatasetMeta, path: pathlib.Path) -> None:
    if (meta.dims, meta.num_classes) != (other.dims, other.num_classes):
        raise ConfigError(
            f"{path} has different dimensions than the training dataset"
        )


@click.command(help="Train a model and write its checkpoint, history, and report.")
@_run_options
@click.option(
    "--out",
    "-o",
    "out_dir",
    type=click.Path(file_okay=False, path_type=pathlib.Path),
    default=None,
    help="Output directory (default: the profile's `out_dir` or the runs directory).",
)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    default=False,
    help="Sets the log level to DEBUG to show per-batch losses.",
)
@utils.handle_errors
def train(
    profile: str,
    train_path: None | pathlib.Path,
    valid_path: None | pathlib.Path,
    test_path: None | pathlib.Path,
    out_dir: None | pathlib.Path,
    verbose: bool,
    **overrides: Any,
) -> None:
    utils.set_verbosity(verbose)
    run, meta, train_set, valid_set, test_set = _resolve_run(
        profile,
        overrides,
        {"train_path": train_path, "valid_path": valid_path, "test_path": test_path},
    )
    ckpt, history = _train(run.config, meta, train_set, valid_set)

    out = out_dir or run.paths.get("out_dir") or backend.runs_path
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.ercf", ckpt)
    history.to_csv(out / "history.csv", index=False)
    report = evaluate_checkpoint(ckpt, meta, test_set or valid_set)
    (out / "report.json").write_text(report.to_json() + "\n")
    report.to_csv(out / "confusion.csv")
    logger.info(f"Wrote run artifacts to {out}")
    utils.echo_json(
        {
            "out": str(out),
            "epochs": len(history),
            "best_epoch": ckpt.best_epoch,
            "valid_wa_f1": ckpt.best_metric,
            "eval_split": "test" if test_set else "valid",
            "acc": report.accuracy,
            "wa_f1": report.weighted_f1,
        }
    )


@click.command(name="eval", help="Evaluate a checkpoint on a dataset.")
@click.option(
    "--checkpoint",
    "-c",
    "checkpoint_path",
    type=_PATH,
    required=True,
    help="Checkpoint file written by `train`.",
)
@click.option(
    "--data", "-d", "data_path", type=_PATH, required=True, help="Dataset (JSONL)."
)
@click.option(
    "--confusion",
    type=_PATH,
    default=None,
    help="Also write the confusion matrix to this CSV file.",
)
@click.option(
    "--normalize",
    is_flag=True,
    default=False,
    help="Write row-normalized confusion rates instead of counts.",
)
@utils.handle_errors
def evaluate(
    checkpoint_path: pathlib.Path,
    data_path: pathlib.Path,
    confusion: None | pathlib.Path,
    normalize: bool,
) -> None:
    ckpt = load_checkpoint(checkpoint_path)
    meta, convs = load_jsonl(data_path)
    report = evaluate_checkpoint(ckpt, meta, convs)
    if confusion is not None:
        report.to_csv(confusion, normalize=normalize)
    click.echo(report.to_json())


@click.command(help="Train one model per value of a config axis and tabulate metrics.")
@_run_options
@click.option(
    "--axis", type=click.Choice(AXES), required=True, help="Config axis to vary."
)
@click.option(
    "--values",
    multiple=True,
    required=True,
    help=(
        "Axis values. Multiple values can be given by repeating the option, "
        "separating values with commas (e.g., `0:0,2:2,4:4`), or by providing "
        "a CSV file path. Windows and layers take `J:K` and `L:K` pairs."
    ),
)
@click.option(
    "--out",
    "-o",
    "out_path",
    type=_PATH,
    default=None,
    help="CSV file for the results table (default: `<runs>/sweep_<axis>.csv`).",
)
@click.option(
    "--workers",
    "-n",
    type=int,
    default=None,
    help="Worker threads (default: ERCFUSE_SWEEP_WORKERS).",
)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    default=False,
    help="Sets the log level to DEBUG to show per-run metrics.",
)
@utils.handle_errors
def sweep(
    profile: str,
    train_path: None | pathlib.Path,
    valid_path: None | pathlib.Path,
    test_path: None | pathlib.Path,
    axis: str,
    values: list[str],
    out_path: None | pathlib.Path,
    workers: None | int,
    verbose: bool,
    **overrides: Any,
) -> None:
    utils.set_verbosity(verbose)
    run, meta, train_set, valid_set, test_set = _resolve_run(
        profile,
        overrides,
        {"train_path": train_path, "valid_path": valid_path, "test_path": test_path},
    )
    table = ablation_sweep(
        run.config,
        axis,
        utils.expand_csv(list(values)),
        meta,
        train_set,
        valid_set,
        test_set=test_set or None,
        workers=workers,
    )
    out = out_path or backend.runs_path / f"sweep_{axis}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    logger.info(f"Wrote {len(table)} sweep rows to {out}")
    for line in table.to_json(orient="records", lines=True).splitlines():
        click.echo(line)

