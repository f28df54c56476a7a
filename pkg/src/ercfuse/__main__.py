"""Main CLI entry points."""

import logging
import time

import click

from . import data, testing, train, utils
from .config import ModelConfig, UpdateRule
from .graph import build_graph

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


@click.group()
def cli() -> None:
    ...


cli.add_command(data._cli.synth, "synth")
cli.add_command(train._cli.train, "train")
cli.add_command(train._cli.evaluate, "eval")
cli.add_command(train._cli.sweep, "sweep")


@cli.command(
    help=(
        "Compare backpropagated gradients of every model parameter against "
        "central finite differences on a tiny synthetic conversation. Exits "
        "with 1 if any parameter's relative error reaches the tolerance."
    ),
)
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option(
    "--m",
    "m",
    type=int,
    default=4,
    show_default=True,
    help="Number of utterances in the checked conversation.",
)
@click.option(
    "--d-model", type=int, default=8, show_default=True, help="Model width D."
)
@click.option(
    "--heads", type=int, default=2, show_default=True, help="Attention heads."
)
@click.option(
    "--mdgat-layers",
    type=int,
    default=1,
    show_default=True,
    help="Graph-attention layers.",
)
@click.option(
    "--mpcat-layers", type=int, default=1, show_default=True, help="Cross-modal layers."
)
@click.option(
    "--update-rule",
    type=click.Choice([r.value for r in UpdateRule]),
    default=UpdateRule.SUM_PRODUCT.value,
    show_default=True,
    help="Graph-attention updating function.",
)
@click.option("--corrupt", default=None, hidden=True)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    default=False,
    help="Sets the log level to DEBUG to show every parameter's error.",
)
@utils.handle_errors
def gradcheck(
    seed: int,
    m: int,
    d_model: int,
    heads: int,
    mdgat_layers: int,
    mpcat_layers: int,
    update_rule: str,
    corrupt: None | str,
    verbose: bool,
) -> None:
    utils.set_verbosity(verbose)
    config = ModelConfig(
        d_model=d_model,
        heads=heads,
        mdgat_layers=mdgat_layers,
        mpcat_layers=mpcat_layers,
        window=(1, 1),
        speaker_weight=1.0,
        update_rule=update_rule,
        dropout=0.0,
        seed=seed,
        ff_dim=2 * d_model,
        text_hidden=max(1, d_model // 2),
    )
    start = time.monotonic()
    report = testing.gradcheck_model(config, m=m, corrupt=corrupt)
    for name, err in report.errors.items():
        logger.debug(f"{name}: {err:.3e}")
    logger.info(
        f"Checked {report.context['parameters']} parameters in "
        f"{time.monotonic() - start:.1f}s"
    )
    utils.echo_json(report.to_dict())
    if not report.passed:
        logger.error(f"Gradient check failed for {', '.join(report.failures)}")
        raise SystemExit(1)


@cli.command(
    name="inspect-graph",
    help="Print a conversation graph's edge list and in-degree histogram as JSON.",
)
@click.option("--m", "m", type=int, required=True, help="Number of utterances.")
@click.option(
    "--j", "past", type=int, default=0, show_default=True, help="Past window."
)
@click.option(
    "--k", "future", type=int, default=0, show_default=True, help="Future window."
)
@utils.handle_errors
def inspect_graph(m: int, past: int, future: int) -> None:
    utils.echo_json(build_graph(m, past, future).summary())


def main() -> int:
    """Create and run parsers according to the given commands."""
    cli()
    return 0


if __name__ == "__main__":
    SystemExit(main())
