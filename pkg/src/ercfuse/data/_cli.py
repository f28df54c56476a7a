"""Dataset CLI."""

import logging
import pathlib

import click
import numpy as np

from .. import utils
from .jsonl import save_jsonl
from .synth import synth_dataset

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


def _parse_floats(value: str, n: int, name: str) -> tuple[float, ...]:
    try:
        parts = [float(x) for x in value.split(",")]
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint=name) from e
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise click.BadParameter(
            f"expected 1 or {n} comma-separated values", param_hint=name
        )
    return tuple(parts)


@click.command(help="Generate a seeded synthetic tri-modal conversation dataset.")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False, path_type=pathlib.Path),
    required=True,
    help="Path of the JSONL dataset file to write.",
)
@click.option(
    "--convs", type=int, default=50, show_default=True, help="Number of conversations."
)
@click.option(
    "--min-len",
    type=int,
    default=8,
    show_default=True,
    help="Minimum number of utterances per conversation.",
)
@click.option(
    "--max-len",
    type=int,
    default=12,
    show_default=True,
    help="Maximum number of utterances per conversation.",
)
@click.option(
    "--classes",
    type=int,
    default=4,
    show_default=True,
    help="Number of emotion classes.",
)
@click.option(
    "--speakers", type=int, default=2, show_default=True, help="Number of speaker ids."
)
@click.option(
    "--dims",
    default="32,16,16",
    show_default=True,
    help="Text, audio, and visual feature widths as comma-separated integers.",
)
@click.option(
    "--separation",
    type=float,
    default=6.0,
    show_default=True,
    help="Distance between class prototypes. 0 removes all class signal.",
)
@click.option(
    "--persistence",
    type=float,
    default=0.6,
    show_default=True,
    help="Probability that an utterance repeats the previous utterance's emotion.",
)
@click.option(
    "--noise-rate",
    type=float,
    default=0.0,
    show_default=True,
    help="Fraction of utterances whose features carry no class signal.",
)
@click.option(
    "--speaker-bias",
    type=float,
    default=0.0,
    show_default=True,
    help="Probability that an utterance takes its speaker's characteristic emotion.",
)
@click.option(
    "--modal-signal",
    default="1.0",
    show_default=True,
    help=(
        "Class signal scale of each modality, either one value for all three or "
        "three comma-separated values (text, audio, visual)."
    ),
)
@utils.handle_errors
def synth(
    seed: int,
    out: pathlib.Path,
    convs: int,
    min_len: int,
    max_len: int,
    classes: int,
    speakers: int,
    dims: str,
    separation: float,
    persistence: float,
    noise_rate: float,
    speaker_bias: float,
    modal_signal: str,
) -> None:
    try:
        widths = tuple(int(d) for d in dims.split(","))
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--dims") from e
    if len(widths) != 3:
        raise click.BadParameter("expected three widths", param_hint="--dims")
    meta, dataset = synth_dataset(
        seed,
        convs,
        (min_len, max_len),
        classes,
        speakers,
        widths,  # type: ignore[arg-type]
        separation,
        persistence=persistence,
        noise_rate=noise_rate,
        speaker_bias=speaker_bias,
        modal_signal=_parse_floats(modal_signal, 3, "--modal-signal"),
    )
    save_jsonl(out, meta, dataset)
    labels = np.concatenate([c.labels for c in dataset])
    histogram = np.bincount(labels, minlength=classes).tolist()
    logger.info(
        f"Wrote {len(dataset)} conversations ({labels.size} utterances) to {out}"
    )
    utils.echo_json(
        {
            "path": str(out),
            "convs": len(dataset),
            "utterances": int(labels.size),
            "class_histogram": histogram,
        }
    )
