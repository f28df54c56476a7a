"""Top-level model interface."""

from . import encoder, head, mdgat, mpcat, network, params
from .network import Model
