"""Conversation graphs built from past/future context windows.

Every utterance of a conversation is a node. Each node receives directed
edges from the utterances inside its window (``past`` before it, ``future``
after it), clamped at the conversation's ends. The same topology is reused
for the text, audio, and visual graphs; only the node features differ.

"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class ConvGraph:
    """Immutable directed edge list of one conversation.

    Edges are stored grouped by destination node in ascending order, and by
    ascending source within each destination, so any aggregation over them
    happens in a fixed order.

    """

    #: Number of utterances in the conversation.
    num_nodes: int

    #: Source node of each edge (the attended neighbor).
    src: np.ndarray

    #: Destination node of each edge (the node being updated).
    dst: np.ndarray

    #: Past and future window sizes ``(J, K)``.
    window: tuple[int, int]

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(src, dst)`` pairs."""
        return list(zip(self.src.tolist(), self.dst.tolist()))

    @property
    def num_edges(self) -> int:
        """Total number of edges."""
        return int(self.src.size)

    def in_degree(self) -> np.ndarray:
        """Number of incoming edges for every node."""
        return np.bincount(self.dst, minlength=self.num_nodes)

    def summary(self) -> dict[str, Any]:
        """JSON-serializable description with the edge list and an in-degree
        histogram (``{degree: count}``).

        """
        degrees, counts = np.unique(self.in_degree(), return_counts=True)
        return {
            "m": self.num_nodes,
            "window": list(self.window),
            "num_edges": self.num_edges,
            "edges": [list(e) for e in self.edges],
            "in_degree_histogram": {
                str(d): int(c) for d, c in zip(degrees.tolist(), counts.tolist())
            },
        }


def build_graph(m: int, past: int, future: int, /) -> ConvGraph:
    """Connect every utterance to its ``past`` preceding and ``future``
    following utterances.

    Args:
        m: Number of utterances.
        past: Past window size ``J``.
        future: Future window size ``K``.

    Returns:
        A graph with an edge ``(j, i)`` for every ``j != i`` with
        ``i - past <= j <= i + future`` and ``0 <= j < m``.

    Raises:
        `ContractError`: If ``m < 1`` or a window size is negative.

    Examples:
        >>> from ercfuse.graph import build_graph
        >>> build_graph(3, 1, 1).edges
        [(1, 0), (0, 1), (2, 1), (1, 2)]
        >>> build_graph(1, 4, 4).edges
        []

    """
    if m < 1:
        raise ContractError(f"a conversation graph needs m >= 1 but got {m}")
    if past < 0 or future < 0:
        raise ContractError(f"window sizes must be >= 0 but got ({past}, {future})")
    src: list[int] = []
    dst: list[int] = []
    for i in range(m):
        for j in range(max(0, i - past), min(m - 1, i + future) + 1):
            if j != i:
                src.append(j)
                dst.append(i)
    return ConvGraph(
        num_nodes=m,
        src=np.asarray(src, dtype=np.int64),
        dst=np.asarray(dst, dtype=np.int64),
        window=(past, future),
    )


def neighbors_of(g: ConvGraph, i: int, /) -> list[int]:
    """Sources of the edges pointing into node ``i``, ascending.

    Raises:
        `ContractError`: If ``i`` isn't a node of ``g``.

    Examples:
        >>> from ercfuse.graph import build_graph, neighbors_of
        >>> neighbors_of(build_graph(3, 1, 1), 1)
        [0, 2]

    """
    if not 0 <= i < g.num_nodes:
        raise ContractError(
            f"node {i} is out of range for a graph with {g.num_nodes} nodes"
        )
    return g.src[g.dst == i].tolist()
