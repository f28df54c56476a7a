"""Top-level dataset interface."""

import pathlib

from . import _cli, batch, jsonl, records, synth
from .batch import Batch, batch_conversations, split_conversations
from .jsonl import load_jsonl, save_jsonl
from .records import Conversation, DatasetMeta, UtteranceRecord, validate_dataset
from .synth import synth_dataset

sample_path = pathlib.Path(__file__).parent / "sample.jsonl"
"""Bundled five-conversation dataset for smoke runs.

:meta hide-value:
"""
