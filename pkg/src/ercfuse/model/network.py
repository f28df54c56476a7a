"""The full two-stage fusion network.

Per conversation, the forward pass runs

1. pre-encoding of every modality to width ``D`` plus speaker embeddings,
2. a graph-attention stack per modality over the windowed conversation
   graph,
3. the cross-modal attention stack over all modalities,
4. fusion and classification.

Modalities left out of :attr:`ModelConfig.modalities` get no parameters at
all.

"""

import logging

import numpy as np

from .. import utils
from ..config import ModelConfig
from ..data.records import Conversation, DatasetMeta
from ..errors import ConfigError
from ..graph import ConvGraph, build_graph
from ..tensor import Tensor
from .encoder import TextEncoder, inject_speaker, preencode_av, preencode_text
from .head import Classifier, classify, fuse, predict
from .mdgat import MdgatLayer, mdgat_forward
from .mpcat import ModalState, MpcatBlock, mpcat_forward
from .params import Linear, ParamStore

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


class Model:
    """Parameters and forward pass of one model instance.

    Instances share no mutable state, so independent models can be trained
    in different threads.

    Args:
        config: Hyperparameters. Initialization is seeded by
            ``config.seed``.
        meta: Dataset dimensions (feature widths, classes, speakers).

    Examples:
        >>> import ercfuse
        >>> from ercfuse.config import ModelConfig
        >>> meta, convs = ercfuse.data.synth_dataset(0, 1, (3, 3), 3, 2, (5, 4, 3), 4.0)
        >>> config = ModelConfig(d_model=8, heads=2, window=(1, 1))
        >>> model = ercfuse.model.Model(config, meta)
        >>> model.forward(convs[0]).shape
        (3, 3)

    """

    #: Hyperparameters.
    config: ModelConfig

    #: Dataset dimensions the model was built for.
    meta: DatasetMeta

    #: Every trainable parameter by name.
    store: ParamStore

    #: Text encoder (present when text is used).
    text: None | TextEncoder

    #: Audio/visual encoders by modality.
    av: dict[str, Linear]

    #: ``n x D`` speaker embeddings.
    speakers: Tensor

    #: Graph-attention stacks by modality.
    mdgat: dict[str, list[MdgatLayer]]

    #: Cross-modal layers, each holding one block per modality.
    mpcat: list[dict[str, MpcatBlock]]

    #: ``(M * D) x D`` fusion weight for ``M`` modalities.
    w_u: Tensor

    #: Emotion classifier.
    classifier: Classifier

    def __init__(self, config: ModelConfig, meta: DatasetMeta, /) -> None:
        self.config = config
        self.meta = meta
        (init_rng,) = utils.seeded_rngs(config.seed, 1)
        store = self.store = ParamStore(init_rng)
        d = config.d_model
        mods = config.modalities

        self.text = None
        self.av = {}
        for m in mods:
            if m == "t":
                self.text = TextEncoder.init(
                    store, "encoder.t", meta.dim("t"), config.text_width, d
                )
            else:
                self.av[m] = Linear.init(store, f"encoder.{m}", meta.dim(m), d)
        self.speakers = store.normal("speaker.table", (meta.num_speakers, d), std=0.02)
        self.mdgat = {
            m: [
                MdgatLayer.init(
                    store,
                    f"mdgat.{m}.{i}",
                    config.update_rule,
                    d,
                    config.heads,
                    config.message_width,
                )
                for i in range(config.mdgat_layers)
            ]
            for m in mods
        }
        self.mpcat = [
            {
                m: MpcatBlock.init(
                    store,
                    f"mpcat.{k}.{m}",
                    [o for o in mods if o != m],
                    d,
                    config.heads,
                    config.ff_width,
                )
                for m in mods
            }
            for k in range(config.mpcat_layers)
        ]
        self.w_u = store.weight("fusion.w_u", len(mods) * d, d)
        self.classifier = Classifier.init(store, "classifier", d, d, meta.num_classes)
        logger.debug(f"Built a model with {self.num_parameters()} parameters")

    def check_meta(self, meta: DatasetMeta, /) -> None:
        """Make sure a dataset fits this model.

        Raises:
            `ConfigError`: If feature widths or class counts differ or the
                dataset has more speakers than the model has embeddings.

        """
        if (
            meta.dims != self.meta.dims
            or meta.num_classes != self.meta.num_classes
            or meta.num_speakers > self.meta.num_speakers
        ):
            raise ConfigError(
                f"the model was built for dims {self.meta.dims}, "
                f"C={self.meta.num_classes}, n={self.meta.num_speakers} but the "
                f"dataset has dims {meta.dims}, C={meta.num_classes}, "
                f"n={meta.num_speakers}"
            )

    def encode(self, conv: Conversation, /) -> ModalState:
        """Pre-encode every modality and add speaker embeddings."""
        out: ModalState = {}
        for m in self.config.modalities:
            x = Tensor(conv.features(m))
            if m == "t":
                assert self.text is not None
                out[m] = preencode_text(x, self.text)
            else:
                out[m] = preencode_av(x, self.av[m])
        return inject_speaker(
            out, conv.speakers, self.speakers, self.config.speaker_weight
        )

    def forward(
        self,
        conv: Conversation,
        /,
        *,
        train: bool = False,
        rng: None | np.random.Generator = None,
    ) -> Tensor:
        """Class probabilities of every utterance.

        Args:
            conv: Conversation to classify.
            train: Whether dropout is active.
            rng: Dropout generator (required when ``train`` is set).

        Returns:
            ``m x C`` probabilities.

        """
        return self.forward_states(conv, train=train, rng=rng)[1]

    def forward_states(
        self,
        conv: Conversation,
        /,
        *,
        train: bool = False,
        rng: None | np.random.Generator = None,
    ) -> tuple[ModalState, Tensor]:
        """Like :meth:`forward` but also returns the final modal states."""
        g = self.graph(len(conv))
        state = self.encode(conv)
        rule = self.config.update_rule
        state = {m: mdgat_forward(x, g, self.mdgat[m], rule) for m, x in state.items()}
        state = mpcat_forward(
            state, self.mpcat, rate=self.config.dropout, train=train, rng=rng
        )
        z = fuse([state[m] for m in self.config.modalities], self.w_u)
        probs, _ = classify(z, self.classifier)
        return state, probs

    def graph(self, m: int, /) -> ConvGraph:
        """Conversation graph for ``m`` utterances under the configured window."""
        return build_graph(m, *self.config.window)

    def num_parameters(self) -> int:
        """Total number of scalar parameters."""
        return sum(p.size for p in self.store)

    def parameters(self) -> list[Tensor]:
        """Trainable tensors in creation order."""
        return list(self.store)

    def predict(self, conv: Conversation, /) -> np.ndarray:
        """Evaluation-mode predicted classes of every utterance."""
        return predict(self.forward(conv).data)
