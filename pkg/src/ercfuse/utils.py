"""Generic utils used by subpackages."""

import csv
import functools
import json
import logging
import re
from pathlib import Path
from typing import Callable, ParamSpec, TypeVar

import click
import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    NumericalError,
    ParseError,
    ValidationError,
)

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

_P = ParamSpec("_P")
_R = TypeVar("_R")


def CamelCase(s: str, /) -> str:
    """Transform a string to CamelCase.

    Credit:
        https://stackoverflow.com/a/1176023

    Args:
        s: Any string.

    Returns:
        A string in CamelCase format.

    Examples:
        >>> ercfuse.utils.CamelCase("sum_product") == "SumProduct"
        True
        >>> ercfuse.utils.CamelCase("concat") == "Concat"
        True

    """
    return "".join(word.title() for word in s.split("_"))


def expand_csv(values: str | list[str], /) -> list[str]:
    """Expand the given list of strings into a flat list of strings, where
    each value in the list of strings could be:

        1. Comma-separated values
        2. A path that points to a CSV file containing values
        3. A regular ol' string

    Order is preserved and duplicates are dropped.

    Args:
        values: List of strings denoting comma-separated values,
            or CSV files containing comma-separated values.

    Returns:
        All strings found within the given list, in order of appearance.

    Examples:
        >>> ercfuse.utils.expand_csv(["0:0,2:2", "4:4"])
        ['0:0', '2:2', '4:4']

    """
    if isinstance(values, str):
        values = [values]

    out: list[str] = []
    for vstring in values:
        for v in vstring.split(","):
            v = v.strip()
            csv_path = Path(v)
            if v and csv_path.is_file():
                with open(csv_path, "r") as f:
                    for row in csv.reader(f):
                        out.extend(x.strip() for x in row if x.strip())
            elif v:
                out.append(v)
    return list(dict.fromkeys(out))


def handle_errors(fn: Callable[_P, _R], /) -> Callable[_P, _R]:
    """Map :mod:`ercfuse` exceptions raised by a CLI command to exit codes.

    User and configuration errors (bad profiles, invalid or unreadable
    datasets, out-of-range arguments) exit with 2 and numerical aborts exit
    with 3, each after logging the error message. Click's own usage errors
    already exit with 2.

    """

    @functools.wraps(fn)
    def wrapper(*args: _P.args, **kwargs: _P.kwargs) -> _R:
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ContractError, ValidationError, ParseError, OSError) as e:
            logger.error(str(e))
            raise SystemExit(2) from e
        except NumericalError as e:
            logger.error(str(e))
            raise SystemExit(3) from e

    return wrapper


def seeded_rngs(seed: int, n: int, /) -> list[np.random.Generator]:
    """Return ``n`` independent generators derived from one seed.

    Examples:
        >>> a, b = ercfuse.utils.seeded_rngs(0, 2)
        >>> a.random() != b.random()
        True

    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def set_verbosity(verbose: bool, /) -> None:
    """Set the package logger to DEBUG if ``verbose``."""
    if verbose:
        logging.getLogger(__package__).setLevel(logging.DEBUG)


def snake_case(s: str, /) -> str:
    """Transform a string to snake_case.

    Credit:
        https://stackoverflow.com/a/1176023

    Args:
        s: Any string.

    Returns:
        A string in snake_case format.

    Examples:
        >>> ercfuse.utils.snake_case("SumProduct") == "sum_product"
        True
        >>> ercfuse.utils.snake_case("Sum") == "sum"
        True

    """
    s = re.sub("(.)([A-Z][a-z]+)", r"\1_\2", s)
    s = re.sub("__([A-Z])", r"_\1", s)
    s = re.sub("([a-z0-9])([A-Z])", r"\1_\2", s)
    return s.lower()


def echo_json(obj: object, /) -> None:
    """Write ``obj`` as one JSON line to standard output."""
    click.echo(json.dumps(obj, sort_keys=False))
