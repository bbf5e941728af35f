"""Undirected communication graphs and their spectral quantities.

A topology is an immutable edge set over nodes 1..N. The Laplacian spectrum
drives the consensus stage: with the optimal gain alpha* = 2/(lambda2 +
lambda_max), one averaging round contracts the disagreement component by
gamma = (lambda_max - lambda2)/(lambda_max + lambda2) < 1 on a connected
graph. Connectivity itself is decided by traversal, never by an eigenvalue
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import sym_eigvals

_CONNECT_ATTEMPTS = 1000


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    """Raised where a quantity is meaningless on a disconnected graph."""


@dataclass(frozen=True)
class GraphTopology:
    """Simple undirected graph: node ids 1..n_nodes, unordered edge pairs."""

    n_nodes: int
    edges: frozenset

    def __post_init__(self):
        if self.n_nodes < 1:
            raise GraphError("graph needs at least one node")
        norm = set()
        for e in self.edges:
            i, j = e
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            if not (1 <= i <= self.n_nodes and 1 <= j <= self.n_nodes):
                raise GraphError(f"edge {e} outside 1..{self.n_nodes}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> list:
        return sorted(
            j for (a, b) in self.edges for j in ((b,) if a == i else (a,) if b == i else ())
        )

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_nodes, self.n_nodes))
        for i, j in self.edges:
            adj[i - 1, j - 1] = 1.0
            adj[j - 1, i - 1] = 1.0
        return adj

    def neighbor_csr(self):
        """(indptr, indices) neighbor lists in 0-based CSR layout."""
        lists = [[] for _ in range(self.n_nodes)]
        for i, j in self.edges:
            lists[i - 1].append(j - 1)
            lists[j - 1].append(i - 1)
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        for i, lst in enumerate(lists):
            lst.sort()
            indptr[i + 1] = indptr[i] + len(lst)
        indices = np.fromiter(
            (j for lst in lists for j in lst), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices


def graph_from_edges(n_nodes: int, edges) -> GraphTopology:
    return GraphTopology(n_nodes=n_nodes, edges=frozenset(tuple(e) for e in edges))


def complete_graph(n: int) -> GraphTopology:
    return graph_from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def path_graph(n: int) -> GraphTopology:
    return graph_from_edges(n, [(i, i + 1) for i in range(1, n)])


def laplacian(g: GraphTopology) -> np.ndarray:
    """L = D - Adj; symmetric, zero row sums, positive semidefinite."""
    adj = g.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def is_connected(g: GraphTopology) -> bool:
    """Breadth-first reachability from node 1."""
    if g.n_nodes == 1:
        return True
    nbrs = [[] for _ in range(g.n_nodes + 1)]
    for i, j in g.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n_nodes


@dataclass(frozen=True)
class SpectralInfo:
    """Laplacian spectrum summary plus the optimal consensus gain.

    lambda2 is the algebraic connectivity, alpha_star = 2/(lambda2 +
    lambda_max) minimizes |I - alpha*L - P|_2 over the gain, and gamma is
    that minimum: the per-round contraction of the disagreement component.
    """

    lambda2: float
    lambda_max: float
    alpha_star: float
    gamma: float


def spectral(g: GraphTopology) -> SpectralInfo:
    if g.n_nodes < 2:
        raise GraphError("spectral quantities need at least two nodes")
    if not is_connected(g):
        raise DisconnectedGraphError(
            "graph is disconnected: contraction factor and optimal gain are undefined"
        )
    vals = sym_eigvals(laplacian(g))
    lam2 = float(vals[1])
    lam_max = float(vals[-1])
    return SpectralInfo(
        lambda2=lam2,
        lambda_max=lam_max,
        alpha_star=2.0 / (lam2 + lam_max),
        gamma=(lam_max - lam2) / (lam_max + lam2),
    )


def consensus_contraction_norm(g: GraphTopology, alpha: float) -> float:
    """|I - alpha*L - P|_2 with P the rank-one averaging projector.

    The matrix is symmetric, so the norm is the largest absolute eigenvalue.
    The per-agent state dimension drops out (the Kronecker factor leaves the
    2-norm unchanged), so the N x N form suffices.
    """
    if not is_connected(g):
        raise DisconnectedGraphError("contraction norm is undefined on a disconnected graph")
    n = g.n_nodes
    w = np.eye(n) - alpha * laplacian(g) - np.full((n, n), 1.0 / n)
    vals = sym_eigvals(w)
    return float(max(abs(vals[0]), abs(vals[-1])))


def contraction_norm_profile(g: GraphTopology, alphas) -> np.ndarray:
    """consensus_contraction_norm over many gains at once.

    Uses the eigenvalue identity |I - alpha*L - P|_2 = max_{i>=2}
    |1 - alpha*lambda_i(L)|, so the Laplacian spectrum is computed once.
    """
    if not is_connected(g):
        raise DisconnectedGraphError("contraction norm is undefined on a disconnected graph")
    lam = sym_eigvals(laplacian(g))[1:]
    alphas = np.asarray(alphas, dtype=float)
    return np.abs(1.0 - np.outer(alphas, lam)).max(axis=1)


def gen_random_connected(n: int, edge_prob: float, seed: int) -> GraphTopology:
    """Erdos-Renyi G(n, p) redrawn until connected; deterministic per seed."""
    if n < 2:
        raise GraphError("random connected graph needs n >= 2")
    if not (0.0 < edge_prob <= 1.0):
        raise GraphError(f"edge_prob must be in (0, 1], got {edge_prob}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), n]))
    for _ in range(_CONNECT_ATTEMPTS):
        iu, ju = np.triu_indices(n, k=1)
        mask = rng.random(iu.size) < edge_prob
        edges = [(int(i) + 1, int(j) + 1) for i, j in zip(iu[mask], ju[mask])]
        g = graph_from_edges(n, edges)
        if is_connected(g):
            return g
    raise GraphError(
        f"no connected draw in {_CONNECT_ATTEMPTS} attempts at p={edge_prob}; "
        "raise edge_prob"
    )


def write_edgelist(g: GraphTopology, path) -> None:
    """Text format: first line N, then one '(i, j)' pair per line, 1-indexed."""
    lines = [str(g.n_nodes)]
    lines += [f"{i} {j}" for i, j in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> GraphTopology:
    raw = Path(path).read_text().split("\n")
    rows = [ln.strip() for ln in raw if ln.strip()]
    if not rows:
        raise GraphError(f"empty edge-list file: {path}")
    try:
        n = int(rows[0])
        edges = []
        for ln in rows[1:]:
            i, j = ln.split()
            edges.append((int(i), int(j)))
    except ValueError as exc:
        raise GraphError(f"malformed edge-list file {path}: {exc}") from exc
    return graph_from_edges(n, edges)
