"""Simulated peer-to-peer network: topology, gossip weights, agreement, flooding.

Nodes are 0-based internally; "node 1" of the algorithms is index 0.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DisconnectedAfterRetries
from .numerics import symmetric_eigenvalues


@dataclass(frozen=True)
class Topology:
    l_nodes: int
    edges: tuple
    adjacency: tuple
    degrees: np.ndarray
    ecc_node1: int
    p: float = float("nan")
    retries: int = 0

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def max_degree(self):
        return int(self.degrees.max()) if self.l_nodes else 0


@dataclass(frozen=True)
class AgreementWeights:
    w: np.ndarray
    gamma: float
    n_edges: int


def bfs_distances(adjacency, source=0):
    """Hop distances from `source`; unreachable nodes get -1."""
    dist = [-1] * len(adjacency)
    dist[source] = 0
    queue = deque([source])
    while queue:
        g = queue.popleft()
        for j in adjacency[g]:
            if dist[j] < 0:
                dist[j] = dist[g] + 1
                queue.append(j)
    return dist


def from_edges(l_nodes, edges, p=float("nan"), retries=0):
    """Build a connected :class:`Topology` from 0-based undirected edges."""
    canon = set()
    for g, j in edges:
        g, j = int(g), int(j)
        if g == j:
            raise ValueError(f"self-loop at node {g}")
        if not (0 <= g < l_nodes and 0 <= j < l_nodes):
            raise ValueError(f"edge ({g}, {j}) outside 0..{l_nodes - 1}")
        canon.add((min(g, j), max(g, j)))
    edges = tuple(sorted(canon))
    nbrs = [[] for _ in range(l_nodes)]
    for g, j in edges:
        nbrs[g].append(j)
        nbrs[j].append(g)
    adjacency = tuple(tuple(sorted(a)) for a in nbrs)
    dist = bfs_distances(adjacency, 0)
    if min(dist) < 0:
        raise ValueError("graph is not connected")
    return Topology(
        l_nodes=l_nodes,
        edges=edges,
        adjacency=adjacency,
        degrees=np.array([len(a) for a in adjacency], dtype=np.int64),
        ecc_node1=max(dist),
        p=p,
        retries=retries,
    )


def erdos_renyi(l_nodes, p, seed=0, max_retries=1000):
    """Connected G(L, p) graph by rejection sampling.

    Each unordered pair is an edge independently with probability `p`;
    disconnected draws are discarded. ``retries`` on the result is the
    number of rejected draws.
    """
    if not 0 < p <= 1:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if l_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {l_nodes}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(l_nodes, k=1)
    for attempt in range(max_retries):
        keep = rng.random(iu[0].size) < p
        edges = list(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        try:
            return from_edges(l_nodes, edges, p=p, retries=attempt)
        except ValueError:
            continue
    raise DisconnectedAfterRetries(max_retries, l_nodes, p)


def metropolis_weights(topo):
    """Metropolis-Hastings gossip weights ``1 / (1 + max(deg_g, deg_j))`` on each edge."""
    w = np.zeros((topo.l_nodes, topo.l_nodes))
    deg = topo.degrees
    for g, j in topo.edges:
        w[g, j] = w[j, g] = 1.0 / (1.0 + max(deg[g], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    eig = symmetric_eigenvalues(w)
    gamma = float(max(abs(eig[1]), abs(eig[-1]))) if topo.l_nodes > 1 else 0.0
    return AgreementWeights(w=w, gamma=gamma, n_edges=topo.n_edges)


def agree(inputs, weights, rounds, counter=None):
    """Run `rounds` synchronous gossip rounds ``Z <- W Z`` over the node axis.

    Parameters
    ----------
    inputs : array_like, shape (L, ...)
        One value (scalar or matrix) per node.
    weights : AgreementWeights
    rounds : int
    counter : RoundCounter, optional
        Incremented by `rounds` and by ``2 |E|`` messages per round. One-entry
        values are booked as scalar agreement, anything else as matrix
        agreement.

    Returns
    -------
    ndarray
        Node values after the last round, same shape as `inputs`.
    """
    z = np.array(inputs, dtype=float)
    l_nodes = weights.w.shape[0]
    if z.shape[0] != l_nodes:
        raise DimensionMismatch(f"{z.shape[0]} node values for {l_nodes} nodes")
    flat = z.reshape(l_nodes, -1)
    for _ in range(rounds):
        flat = weights.w @ flat
    if counter is not None:
        msgs = 2 * weights.n_edges * rounds
        if flat.shape[1] == 1:
            counter.scalar_rounds += rounds
            counter.scalar_messages += msgs
        else:
            counter.agree_rounds += rounds
            counter.matrix_messages += msgs
    return flat.reshape(z.shape)


def broadcast_from_node1(inputs, topo, counter=None):
    """Every node ends up holding node 1's value, bit for bit.

    Simulates flooding: in round ``k`` the nodes first reached in round
    ``k - 1`` forward the matrix to all their neighbours, so ``ecc(1)``
    rounds are booked, with one message per directed edge out of the frontier.
    """
    z = np.asarray(inputs, dtype=float)
    if z.shape[0] != topo.l_nodes:
        raise DimensionMismatch(f"{z.shape[0]} node values for {topo.l_nodes} nodes")
    if not np.any(z[0]):
        raise ValueError("node 1 holds the zero matrix; nothing to broadcast")
    if counter is not None:
        dist = np.asarray(bfs_distances(topo.adjacency, 0))
        counter.broadcast_rounds += topo.ecc_node1
        for k in range(topo.ecc_node1):
            counter.matrix_messages += int(topo.degrees[dist == k].sum())
    return np.repeat(z[:1], topo.l_nodes, axis=0)


def consensus_rounds(l_nodes, eps, gamma):
    """Smallest round count with ``gamma^T <= eps / L``; enough for ``eps``-accurate agreement."""
    if gamma <= 0:
        return 1
    return max(1, math.ceil(math.log(l_nodes / eps) / math.log(1.0 / gamma)))


def connectivity_bound(l_nodes, eps, t_con, c=1.0):
    """Largest ``gamma(W)`` for which `t_con` rounds reach accuracy `eps`."""
    return math.exp(-c * math.log(l_nodes / eps) / t_con)


def write_edge_list(topo, path):
    with open(path, "w") as fh:
        for g, j in topo.edges:
            fh.write(f"{g + 1} {j + 1}\n")


def read_edge_list(path, l_nodes):
    edges = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                g, j = line.split()
                edges.append((int(g) - 1, int(j) - 1))
    return from_edges(l_nodes, edges)
