"""Graphs, the contextual stochastic block model, and the shift operator.

The shift operator used everywhere in this package is

    A = I - (g / d_max) * (D - Adj)

with ``Adj`` the adjacency matrix, ``D`` the degree matrix and ``d_max`` the
maximal degree of the concrete graph.  Because ``D - Adj`` has zero row sums,
every row of ``A`` sums to one; the covariance fixed-point analysis relies on
this property, so it is asserted at construction time.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyGraphError,
    InvalidGError,
    InvalidProbabilityError,
    ParseError,
    SelfLoopError,
)

ROW_SUM_TOL = 1e-12


def _canonical_edges(edges) -> np.ndarray:
    """Sorted (E, 2) int array of deduplicated undirected edges."""
    pairs = {(int(a), int(b)) if a < b else (int(b), int(a)) for a, b in edges}
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


@dataclass
class Graph:
    """Undirected simple graph with optional two-community labels.

    Parameters
    ----------
    n_nodes : int
        Number of nodes; node ids are 0..n_nodes-1.
    edges : array-like of int pairs
        Undirected edges.  Duplicates are merged, orientation is ignored.
    communities : ndarray or None
        Optional per-node labels in {+1, -1}.
    """

    n_nodes: int
    edges: np.ndarray
    communities: np.ndarray | None = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        self.edges = _canonical_edges(np.asarray(self.edges).reshape(-1, 2))
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= self.n_nodes:
                raise ValueError("edge endpoint outside [0, n_nodes)")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise SelfLoopError("self loops are not allowed")
        if self.communities is not None:
            self.communities = np.asarray(self.communities, dtype=np.int64)
            if self.communities.shape != (self.n_nodes,):
                raise ValueError("communities must have one label per node")
            if not np.all(np.isin(self.communities, (-1, 1))):
                raise ValueError("community labels must be +1 or -1")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix with zero diagonal."""
        adj = np.zeros((self.n_nodes, self.n_nodes))
        if self.edges.size:
            i, j = self.edges[:, 0], self.edges[:, 1]
            adj[i, j] = 1.0
            adj[j, i] = 1.0
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.edges.size else 0


def complete_graph(n_nodes: int) -> Graph:
    """Complete graph on ``n_nodes`` nodes."""
    iu = np.transpose(np.triu_indices(n_nodes, k=1))
    return Graph(n_nodes=n_nodes, edges=iu)


@dataclass
class ShiftOperator:
    """Dense graph-mixing matrix with unit row sums.

    ``matrix`` is N x N; ``g`` in (0, 1) weighs off-diagonal against
    diagonal entries.  Constructed from a graph via `build_shift_operator`.
    """

    matrix: np.ndarray
    g: float

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("shift operator must be square")

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))


def build_shift_operator(graph: Graph, g: float) -> ShiftOperator:
    """Build A = I - (g / d_max) (D - Adj) for an undirected graph.

    Raises
    ------
    InvalidGError
        If g is outside the open interval (0, 1).
    EmptyGraphError
        If the graph has no edges (d_max would be zero).
    """
    if not (0.0 < g < 1.0):
        raise InvalidGError(f"g must lie in (0, 1), got {g}")
    if graph.n_edges == 0:
        raise EmptyGraphError("graph has no edges; shift operator undefined")
    deg = graph.degrees().astype(np.float64)
    if np.any(deg == 0):
        warnings.warn(
            "graph has isolated nodes; their shift-operator rows are identity rows",
            stacklevel=2,
        )
    d_max = deg.max()
    adj = graph.adjacency()
    lap = np.diag(deg) - adj
    matrix = np.eye(graph.n_nodes) - (g / d_max) * lap
    op = ShiftOperator(matrix=matrix, g=g)
    err = op.row_sum_error()
    if err >= ROW_SUM_TOL:
        raise AssertionError(f"row sums deviate from 1 by {err:.3e}")
    return op


@dataclass
class CsbmParams:
    """Parameters of the two-community contextual stochastic block model.

    Edge probabilities are p_in = (d + snr*sqrt(d))/N within a community and
    p_out = (d - snr*sqrt(d))/N across communities.  Features are
    X = sqrt(feature_strength / N) * v u^T + Z with v the +-1 community
    vector, u a standard-normal vector of length d0 = max(1, round(aspect*N))
    and Z i.i.d. standard normal.
    """

    n_nodes: int
    avg_degree: float
    snr: float = 0.0
    feature_strength: float = 0.0
    aspect: float = 1.0
    seed: int = 0

    @property
    def p_in(self) -> float:
        return (self.avg_degree + self.snr * np.sqrt(self.avg_degree)) / self.n_nodes

    @property
    def p_out(self) -> float:
        return (self.avg_degree - self.snr * np.sqrt(self.avg_degree)) / self.n_nodes

    @property
    def n_features(self) -> int:
        return max(1, round(self.aspect * self.n_nodes))

    def validate(self):
        if self.n_nodes < 2 or self.n_nodes % 2 != 0:
            raise ValueError("n_nodes must be even and >= 2 for balanced communities")
        if self.aspect <= 0:
            raise ValueError("aspect must be positive")
        for name, p in (("p_in", self.p_in), ("p_out", self.p_out)):
            if not (0.0 <= p <= 1.0):
                raise InvalidProbabilityError(f"{name} = {p:.6g} outside [0, 1]")


def generate_csbm(params: CsbmParams) -> tuple[Graph, np.ndarray]:
    """Sample a CSBM graph and its feature matrix, deterministically per seed.

    Returns
    -------
    (Graph, ndarray)
        The graph carries balanced +-1 community labels (first half +1);
        the feature matrix has shape (n_nodes, d0).

    Notes
    -----
    The random stream is consumed in a fixed order (edges, then u, then Z)
    so identical seeds give bit-identical output.
    """
    params.validate()
    n = params.n_nodes
    rng = np.random.default_rng(params.seed)

    communities = np.ones(n, dtype=np.int64)
    communities[n // 2 :] = -1

    rows, cols = np.triu_indices(n, k=1)
    same = communities[rows] == communities[cols]
    p_edge = np.where(same, params.p_in, params.p_out)
    keep = rng.random(rows.shape[0]) < p_edge
    edges = np.column_stack([rows[keep], cols[keep]])

    d0 = params.n_features
    u = rng.standard_normal(d0)
    noise = rng.standard_normal((n, d0))
    signal = np.sqrt(params.feature_strength / n) * np.outer(communities, u)
    features = signal + noise

    graph = Graph(n_nodes=n, edges=edges, communities=communities)
    return graph, features


_COMMUNITY_RE = re.compile(r"#\s*community\s+(\S+)\s+(\S+)\s*$")


def load_edge_list(path) -> Graph:
    """Read a graph from a whitespace-separated edge-list file.

    One edge per line as two integer node ids.  Lines of the form
    ``# community <node> <+1|-1>`` attach community labels; other ``#`` lines
    are comments.  Duplicate edges are merged.
    """
    edges: list[tuple[int, int]] = []
    labels: dict[int, int] = {}
    max_node = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                match = _COMMUNITY_RE.match(line)
                if match is None:
                    continue
                try:
                    node = int(match.group(1))
                    label = int(match.group(2))
                except ValueError as exc:
                    raise ParseError(f"bad community line: {line!r}", lineno) from exc
                if label not in (-1, 1):
                    raise ParseError(f"community label must be +1 or -1, got {label}", lineno)
                labels[node] = label
                max_node = max(max_node, node)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected two node ids, got {line!r}", lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ParseError(f"non-integer node id in {line!r}", lineno) from exc
            if a < 0 or b < 0:
                raise ParseError(f"negative node id in {line!r}", lineno)
            if a == b:
                raise SelfLoopError(f"line {lineno}: self loop on node {a}")
            edges.append((a, b))
            max_node = max(max_node, a, b)
    if max_node < 0:
        raise ParseError("file contains no edges or community lines")
    n_nodes = max_node + 1
    communities = None
    if labels:
        missing = sorted(set(range(n_nodes)) - set(labels))
        if missing:
            raise ParseError(f"community labels missing for nodes {missing[:5]}")
        communities = np.array([labels[i] for i in range(n_nodes)], dtype=np.int64)
    return Graph(n_nodes=n_nodes, edges=np.array(edges), communities=communities)


def write_edge_list(graph: Graph, path) -> None:
    """Write a graph in the edge-list format understood by `load_edge_list`."""
    with open(path, "w", encoding="utf-8") as fh:
        if graph.communities is not None:
            for node, label in enumerate(graph.communities):
                fh.write(f"# community {node} {'+1' if label > 0 else '-1'}\n")
        for a, b in graph.edges:
            fh.write(f"{a} {b}\n")


def write_features_csv(features: np.ndarray, path) -> None:
    """Write a feature matrix as CSV with header ``node,f0,f1,...``."""
    features = np.asarray(features)
    header = "node," + ",".join(f"f{j}" for j in range(features.shape[1]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for node, row in enumerate(features):
            fh.write(str(node) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def load_features_csv(path) -> np.ndarray:
    """Read a feature matrix written by `write_features_csv`."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    return data[:, 1:]
