"""Main package interface."""

from importlib.metadata import PackageNotFoundError, version

from dotenv import load_dotenv

load_dotenv()

from . import (
    backend,
    config,
    data,
    errors,
    graph,
    metrics,
    model,
    optim,
    tensor,
    testing,
    train,
    utils,
)

try:
    __version__ = version("ercfuse")
except PackageNotFoundError:
    pass
