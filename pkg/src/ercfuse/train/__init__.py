"""Top-level training interface."""

from . import _cli, checkpoint, sweep, trainer
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .sweep import ablation_sweep
from .trainer import evaluate_checkpoint, evaluate_model, train
