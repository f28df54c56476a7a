"""Model hyperparameters and run profiles.

A profile is a plain-text ``KEY=VALUE`` file (``#`` starts a comment) whose
keys are :class:`ModelConfig` field names plus the run paths
``train_path``, ``valid_path``, ``test_path``, and ``out_dir``::

    # iemocap.profile
    mdgat_layers=3
    mpcat_layers=4
    speaker_weight=1.6
    window=16,16

Two profiles ship with the package, ``iemocap`` and ``meld``; see
:func:`load_profile`.

"""

import dataclasses
import enum
import pathlib
from dataclasses import dataclass, field
from typing import Any, Callable

from dotenv import dotenv_values

from . import utils
from .data.records import MODALITIES
from .errors import ConfigError

profiles_path = pathlib.Path(__file__).parent / "profiles"
"""Directory holding the bundled profiles.

:meta hide-value:
"""


class UpdateRule(str, enum.Enum):
    """How an attention head combines aggregated neighbor messages with the
    node's previous state.

    """

    #: ``W0 m + W1 x``.
    SUM = "sum"

    #: ``W [m || x]``.
    CONCAT = "concat"

    #: ``W [(m + x) || (m * x)]``.
    SUM_PRODUCT = "sum_product"

    @classmethod
    def parse(cls, name: "str | UpdateRule", /) -> "UpdateRule":
        """Parse a rule from its CamelCase or snake_case name.

        Examples:
            >>> from ercfuse.config import UpdateRule
            >>> UpdateRule.parse("SumProduct") is UpdateRule.parse("sum_product")
            True

        """
        if isinstance(name, UpdateRule):
            return name
        try:
            return cls(utils.snake_case(name.strip()))
        except ValueError as e:
            choices = ", ".join(utils.CamelCase(r.value) for r in cls)
            raise ConfigError(
                f"unknown update rule `{name}`; expected one of {choices}"
            ) from e


def parse_modalities(value: str | tuple[str, ...] | list[str], /) -> tuple[str, ...]:
    """Parse a modality set such as ``"t,a,v"``, ``"tav"``, or ``("a", "t")``
    into canonical ``t, a, v`` order.

    Raises:
        `ConfigError`: If a modality is unknown or repeated, or fewer than
            two are given.

    """
    if isinstance(value, str):
        value = [v for v in value.replace(",", "") if not v.isspace()]
    chosen = [v.strip() for v in value]
    unknown = [v for v in chosen if v not in MODALITIES]
    if unknown or len(set(chosen)) != len(chosen):
        raise ConfigError(
            f"modalities must be distinct members of t, a, v but got {value}"
        )
    if len(chosen) < 2:
        raise ConfigError(f"at least two modalities are required but got {value}")
    return tuple(m for m in MODALITIES if m in chosen)


@dataclass(frozen=True)
class ModelConfig:
    """Every hyperparameter of a model and its training run.

    Defaults follow the long-training (IEMOCAP-style) setting. Widths left
    as ``None`` default to ``d_model``.

    Raises:
        `ConfigError`: If any field is out of range or fields are
            inconsistent (e.g., ``d_model`` not divisible by ``heads``).

    Examples:
        >>> from ercfuse.config import ModelConfig
        >>> config = ModelConfig(d_model=16, heads=2, window=(2, 2))
        >>> config.replace(speaker_weight=0.0).speaker_weight
        0.0

    """

    #: Common width ``D`` of every modality after pre-encoding.
    d_model: int = 64

    #: Attention heads in every graph-attention and cross-modal layer.
    heads: int = 4

    #: Number of graph-attention layers ``L`` per modality.
    mdgat_layers: int = 3

    #: Number of cross-modal attention layers ``K``.
    mpcat_layers: int = 4

    #: Past and future context window sizes ``(J, K)``.
    window: tuple[int, int] = (16, 16)

    #: Speaker embedding trade-off ``lambda``.
    speaker_weight: float = 1.6

    #: Graph-attention updating function.
    update_rule: UpdateRule = UpdateRule.SUM_PRODUCT

    #: Dropout rate used everywhere dropout applies.
    dropout: float = 0.1

    #: AdamW learning rate.
    lr: float = 1e-5

    #: AdamW decoupled weight decay.
    weight_decay: float = 1e-5

    #: Conversations per optimizer step.
    batch_size: int = 8

    #: Maximum number of training epochs.
    max_epochs: int = 100

    #: Epochs without validation improvement before stopping early.
    patience: int = 15

    #: Seed for initialization, shuffling, and dropout.
    seed: int = 0

    #: Modalities used, at least two of ``t``, ``a``, ``v``.
    modalities: tuple[str, ...] = MODALITIES

    #: Width of graph messages (defaults to ``d_model``).
    message_dim: None | int = None

    #: Hidden width of the cross-modal feedforward (defaults to ``4 * d_model``).
    ff_dim: None | int = None

    #: Text recurrent hidden width per direction (defaults to ``d_model``).
    text_hidden: None | int = None

    #: Global gradient norm limit; ``None`` disables clipping.
    clip_norm: None | float = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "update_rule", UpdateRule.parse(self.update_rule))
        object.__setattr__(self, "modalities", parse_modalities(self.modalities))
        object.__setattr__(self, "window", tuple(int(w) for w in self.window))
        if self.d_model < 1 or self.heads < 1:
            raise ConfigError(
                f"d_model and heads must be >= 1 but got {self.d_model} and {self.heads}"
            )
        if self.d_model % self.heads:
            raise ConfigError(
                f"d_model={self.d_model} isn't divisible by heads={self.heads}"
            )
        if self.mdgat_layers < 0 or self.mpcat_layers < 0:
            raise ConfigError(
                f"layer counts must be >= 0 but got L={self.mdgat_layers}, "
                f"K={self.mpcat_layers}"
            )
        if len(self.window) != 2 or min(self.window) < 0:
            raise ConfigError(f"window must be two sizes >= 0 but got {self.window}")
        if self.speaker_weight < 0:
            raise ConfigError(
                f"speaker_weight must be >= 0 but got {self.speaker_weight}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1) but got {self.dropout}")
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError(
                f"lr and weight_decay must be >= 0 but got {self.lr} and {self.weight_decay}"
            )
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError(
                "batch_size, max_epochs, and patience must be >= 1 but got "
                f"{self.batch_size}, {self.max_epochs}, and {self.patience}"
            )
        for name in ("message_dim", "ff_dim", "text_hidden"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be >= 1 but got {value}")
        if (
            self.update_rule is UpdateRule.SUM_PRODUCT
            and self.message_width != self.d_model
        ):
            raise ConfigError(
                f"the SumProduct update needs message_dim == d_model but got "
                f"{self.message_width} != {self.d_model}"
            )
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be > 0 but got {self.clip_norm}")

    @property
    def head_dim(self) -> int:
        """Per-head width ``D / h``."""
        return self.d_model // self.heads

    @property
    def message_width(self) -> int:
        """Resolved graph message width."""
        return self.message_dim or self.d_model

    @property
    def ff_width(self) -> int:
        """Resolved feedforward hidden width."""
        return self.ff_dim or 4 * self.d_model

    @property
    def text_width(self) -> int:
        """Resolved text recurrent hidden width."""
        return self.text_hidden or self.d_model

    @classmethod
    def from_dict(cls, data: dict[str, Any], /) -> "ModelConfig":
        """Inverse of :meth:`to_dict`.

        Raises:
            `ConfigError`: If ``data`` has unknown keys.

        """
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kwargs = dict(data)
        if "window" in kwargs:
            kwargs["window"] = tuple(kwargs["window"])
        if "modalities" in kwargs:
            kwargs["modalities"] = tuple(kwargs["modalities"])
        return cls(**kwargs)

    def replace(self, **overrides: Any) -> "ModelConfig":
        """Return a validated copy with some fields changed."""
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        """JSON-serializable field values."""
        out = dataclasses.asdict(self)
        out["update_rule"] = self.update_rule.value
        out["window"] = list(self.window)
        out["modalities"] = list(self.modalities)
        return out


def _parse_optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(s: str) -> Any:
        return None if s.strip().lower() in ("", "none") else parse(s)

    return inner


def _parse_pair(s: str) -> tuple[int, int]:
    parts = s.replace(":", ",").split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated integers but got `{s}`")
    return int(parts[0]), int(parts[1])


_FIELD_PARSERS: dict[str, Callable[[str], Any]] = {
    "d_model": int,
    "heads": int,
    "mdgat_layers": int,
    "mpcat_layers": int,
    "window": _parse_pair,
    "speaker_weight": float,
    "update_rule": UpdateRule.parse,
    "dropout": float,
    "lr": float,
    "weight_decay": float,
    "batch_size": int,
    "max_epochs": int,
    "patience": int,
    "seed": int,
    "modalities": parse_modalities,
    "message_dim": _parse_optional(int),
    "ff_dim": _parse_optional(int),
    "text_hidden": _parse_optional(int),
    "clip_norm": _parse_optional(float),
}

PATH_KEYS = ("train_path", "valid_path", "test_path", "out_dir")
"""Profile keys that hold paths rather than hyperparameters."""


def parse_field(name: str, value: str, /) -> Any:
    """Parse one textual ``ModelConfig`` field value (as found in profiles and
    sweep axes).

    Raises:
        `ConfigError`: If the field is unknown or the value doesn't parse.

    Examples:
        >>> from ercfuse.config import parse_field
        >>> parse_field("window", "4,2")
        (4, 2)

    """
    if name not in _FIELD_PARSERS:
        raise ConfigError(f"unknown config key `{name}`")
    try:
        return _FIELD_PARSERS[name](value)
    except ValueError as e:
        raise ConfigError(f"invalid value `{value}` for `{name}`: {e}") from e


@dataclass(frozen=True)
class RunProfile:
    """A parsed profile: a config plus resolved run paths."""

    #: Hyperparameters.
    config: ModelConfig

    #: Absolute paths from the profile (``train_path``, ``out_dir``, ...).
    paths: dict[str, pathlib.Path] = field(default_factory=dict)


def resolve_profile_path(name_or_path: str | pathlib.Path, /) -> pathlib.Path:
    """Resolve a bundled profile name (e.g., ``"iemocap"``) or a file path.

    Raises:
        `ConfigError`: If no such profile or file exists.

    """
    path = pathlib.Path(name_or_path)
    if path.is_file():
        return path.resolve()
    bundled = profiles_path / f"{name_or_path}.profile"
    if bundled.is_file():
        return bundled
    available = ", ".join(sorted(p.stem for p in profiles_path.glob("*.profile")))
    raise ConfigError(
        f"profile `{name_or_path}` is neither a file nor a bundled profile ({available})"
    )


def load_profile(name_or_path: str | pathlib.Path, /, **overrides: Any) -> RunProfile:
    """Load a profile, apply overrides, and validate it.

    Relative paths in the profile are resolved against the profile file's
    directory.

    Args:
        name_or_path: Bundled profile name or path to a profile file.
        overrides: ``ModelConfig`` field values taking precedence over the
            profile's values. ``None`` values are ignored.

    Returns:
        The validated config and resolved paths.

    Raises:
        `ConfigError`: If the profile has unknown keys or invalid values.

    Examples:
        >>> from ercfuse.config import load_profile
        >>> load_profile("meld").config.mdgat_layers
        2

    """
    path = resolve_profile_path(name_or_path)
    values = dotenv_values(path)
    kwargs: dict[str, Any] = {}
    paths: dict[str, pathlib.Path] = {}
    for key, raw in values.items():
        if raw is None:
            raise ConfigError(f"{path}: key `{key}` has no value")
        if key in PATH_KEYS:
            paths[key] = (path.parent / raw).resolve()
        elif key in _FIELD_PARSERS:
            kwargs[key] = parse_field(key, raw)
        else:
            raise ConfigError(f"{path}: unknown key `{key}`")
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return RunProfile(config=ModelConfig(**kwargs), paths=paths)
