"""Decentralized truncated spectral initialization.

Each node forms a truncated moment estimate of its block of ``Theta*``;
the nodes then run a power method on the global Gram matrix, using
gossip agreement for the matrix product and flooding node 1's
orthonormalized iterate so that every node holds the same basis.
"""

import time
from dataclasses import dataclass

import numpy as np

from .metrics import RoundCounter
from .network import agree, broadcast_from_node1
from .numerics import qr_positive


@dataclass(frozen=True)
class InitParams:
    t_pm: int
    t_con_init: int
    kappa_hint: float
    mu_hint: float
    init_seed: object = 0
    truncate: bool = True

    def __post_init__(self):
        if self.t_pm < 1 or self.t_con_init < 1:
            raise ValueError("t_pm and t_con_init must be >= 1")
        if not (self.kappa_hint >= 1 and self.mu_hint >= 1):
            raise ValueError("kappa_hint and mu_hint must be >= 1")


@dataclass
class InitResult:
    u0: np.ndarray        # (L, d, r), identical slices
    alpha: np.ndarray     # (L,) per-node truncation thresholds
    rounds: RoundCounter
    r_final: np.ndarray   # node 1's last R factor
    compute_s: float = 0.0


def local_threshold(y, n, dims, params):
    """Truncation level ``9 kappa^2 mu^2 L/(n T) * sum of squared responses``.

    `y` holds the node's responses (any shape); `n` is the per-task sample
    count they were drawn from.
    """
    energy = float(np.sum(np.square(y)))
    return 9.0 * params.kappa_hint**2 * params.mu_hint**2 * dims.l_nodes / (n * dims.t_tasks) * energy


def truncate_responses(y, alpha):
    """Zero out the entries whose square exceeds `alpha`."""
    y = np.asarray(y, dtype=float)
    return np.where(np.square(y) <= alpha, y, 0.0)


def initial_guess(dims, seed):
    """Orthonormalized Gaussian starting point shared by all nodes via a common seed."""
    rng = np.random.default_rng(seed)
    u, _ = qr_positive(rng.standard_normal((dims.d, dims.r)))
    return u


def _moment_blocks(ds, alphas, truncate):
    n0 = ds.samples_in("0")
    blocks = []
    for g, tasks in enumerate(ds.partition):
        x, y = ds.view("0", tasks)
        if truncate:
            y = truncate_responses(y, alphas[g])
        # column t of the block is X_t^T y_t / n
        blocks.append(np.einsum("knd,kn->dk", x, y) / n0)
    return blocks


def run_init(ds, topo, weights, params, dims, clock=time.perf_counter):
    """Run the decentralized initialization and return every node's starting basis.

    The agreed power-method product approximates the node *average* of the
    local Gram products; it is multiplied by ``L`` so that it estimates the
    global product and node 1's ``R`` factor carries the scale of
    ``sigma_max^2`` (used by the automatic step size).
    """
    counter = RoundCounter()
    l_nodes = ds.l_nodes
    n00 = ds.samples_in("00")
    alpha_in = np.array(
        [local_threshold(ds.view("00", tasks)[1], n00, dims, params) for tasks in ds.partition]
    )
    alphas = agree(alpha_in, weights, params.t_con_init, counter)

    node_time = np.zeros(l_nodes)
    t0 = clock()
    blocks = _moment_blocks(ds, alphas, params.truncate)
    node_time += (clock() - t0) / l_nodes

    u = np.repeat(initial_guess(dims, params.init_seed)[None], l_nodes, axis=0)
    r_final = None
    for _ in range(params.t_pm):
        local = np.empty_like(u)
        for g, block in enumerate(blocks):
            t0 = clock()
            local[g] = block @ (block.T @ u[g])
            node_time[g] += clock() - t0
        mixed = l_nodes * agree(local, weights, params.t_con_init, counter)
        # only node 1's factorization survives the broadcast
        t0 = clock()
        q, r_final = qr_positive(mixed[0])
        node_time[0] += clock() - t0
        staged = np.zeros_like(u)
        staged[0] = q
        u = broadcast_from_node1(staged, topo, counter)

    return InitResult(
        u0=u,
        alpha=alphas,
        rounds=counter,
        r_final=r_final,
        compute_s=float(node_time.max()),
    )


def run_init_central(ds, params, dims, clock=time.perf_counter):
    """Initialization of the centralized baseline: same steps, exact aggregation.

    A server sums the nodes' thresholds once and the Gram products at every
    power iteration; each exchange is booked as one central round.
    """
    counter = RoundCounter()
    n00 = ds.samples_in("00")
    _, y00 = ds.view("00")
    alpha = local_threshold(y00, n00, dims, params) / dims.l_nodes
    counter.central_rounds += 1

    t0 = clock()
    blocks = _moment_blocks(ds, np.full(ds.l_nodes, alpha), params.truncate)
    u = initial_guess(dims, params.init_seed)
    r_final = None
    for _ in range(params.t_pm):
        total = np.zeros_like(u)
        for block in blocks:
            total += block @ (block.T @ u)
        u, r_final = qr_positive(total)
        counter.central_rounds += 1
    elapsed = clock() - t0

    return InitResult(
        u0=np.repeat(u[None], ds.l_nodes, axis=0),
        alpha=np.full(ds.l_nodes, alpha),
        rounds=counter,
        r_final=r_final,
        compute_s=float(elapsed / ds.l_nodes),
    )
