"""Measurement: errors, inter-node gaps, communication-time model, counters."""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class CommModel:
    """Latency-bandwidth cost of one message exchange.

    ``bytes_per_scalar`` multiplies the ``d * r`` payload exactly as in the
    closed form ``latency + 8 d r deg / bandwidth``.
    """

    latency: float = 20e-3
    bandwidth: float = 150e6
    bytes_per_scalar: int = 8

    def __post_init__(self):
        if not self.latency >= 0:
            raise ValueError(f"latency must be >= 0, got {self.latency}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")


@lru_cache(maxsize=4096)
def _exact_cost(latency, bandwidth, bytes_per_scalar, payload):
    # Decimal parameters are taken at face value and the closed form is
    # evaluated exactly, then rounded once.
    lat = Fraction(repr(float(latency)))
    bw = Fraction(repr(float(bandwidth)))
    return float(lat + Fraction(int(bytes_per_scalar) * int(payload)) / bw)


def transfer_seconds(model, payload):
    """Bandwidth part of one exchange carrying `payload` scalars (no latency)."""
    return model.bytes_per_scalar * payload / model.bandwidth


def comm_time_decentralized(model, d, r, max_deg):
    """Seconds for one agreement round: every node sends its ``d x r`` matrix to its neighbours."""
    return _exact_cost(model.latency, model.bandwidth, model.bytes_per_scalar, d * r * max_deg)


def comm_time_centralized(model, d, r, l_nodes):
    """Seconds for one gather-and-broadcast through a server holding all ``L`` matrices."""
    return _exact_cost(model.latency, model.bandwidth, model.bytes_per_scalar, d * r * l_nodes)


def price_rounds(counter, model, d, r, max_deg, l_nodes):
    """Modeled seconds for the rounds booked in `counter`.

    Scalar agreement rounds carry one number per message; agreement and
    flooding rounds a ``d x r`` matrix; central rounds go through the server.
    """
    seconds = 0.0
    if counter.scalar_rounds:
        seconds += counter.scalar_rounds * comm_time_decentralized(model, 1, 1, max_deg)
    matrix_rounds = counter.agree_rounds + counter.broadcast_rounds
    if matrix_rounds:
        seconds += matrix_rounds * comm_time_decentralized(model, d, r, max_deg)
    if counter.central_rounds:
        seconds += counter.central_rounds * comm_time_centralized(model, d, r, l_nodes)
    return seconds


@dataclass
class RoundCounter:
    """Communication accounting for one run.

    ``agree_rounds`` counts matrix agreement rounds (including the single
    neighbour exchange of the DGD variant); ``scalar_rounds`` the agreement
    rounds on the truncation threshold; ``broadcast_rounds`` the flooding
    rounds from node 1; ``central_rounds`` gather/broadcast exchanges of
    the centralized baseline.
    """

    agree_rounds: int = 0
    scalar_rounds: int = 0
    broadcast_rounds: int = 0
    central_rounds: int = 0
    matrix_messages: int = 0
    scalar_messages: int = 0

    @property
    def total_rounds(self):
        return self.agree_rounds + self.scalar_rounds + self.broadcast_rounds + self.central_rounds

    def snapshot(self):
        return RoundCounter(**vars(self))

    def since(self, earlier):
        return RoundCounter(**{k: v - getattr(earlier, k) for k, v in vars(self).items()})


def task_errors(u_per_node, b_per_node, partition, theta_star):
    """Relative parameter error ``||U_g b_t - theta*_t|| / ||theta*_t||`` for every task.

    ``b_per_node[g]`` holds the coefficients of the tasks in ``partition[g]``
    column by column. A zero ground-truth column with a zero estimate counts
    as error 0; a zero column with a nonzero estimate as ``inf``.
    """
    u = np.asarray(u_per_node, dtype=float)
    t_tasks = theta_star.shape[1]
    owner = np.empty(t_tasks, dtype=np.int64)
    b_all = np.empty((t_tasks, u.shape[-1]))
    for g, (b, tasks) in enumerate(zip(b_per_node, partition)):
        owner[tasks] = g
        b_all[tasks] = np.asarray(b).T
    theta_hat = np.matmul(u[owner], b_all[:, :, None])[..., 0]
    diff = np.linalg.norm(theta_hat - theta_star.T, axis=1)
    ref = np.linalg.norm(theta_star, axis=0)
    errs = np.zeros(t_tasks)
    nz = ref > 0
    errs[nz] = diff[nz] / ref[nz]
    errs[~nz & (diff > 0)] = np.inf
    return errs


def internode_gaps(u_per_node, u_star):
    """``(rho_hat, psi_hat)``: max pairwise Frobenius gap, raw and after projecting out ``U*``."""
    u = np.asarray(u_per_node, dtype=float)
    if u.shape[0] < 2:
        return 0.0, 0.0
    perp = u - u_star @ (u_star.T @ u)
    flat = u.reshape(u.shape[0], -1)
    flat_perp = perp.reshape(u.shape[0], -1)
    rho = np.sqrt(np.max(np.sum((flat[:, None] - flat[None]) ** 2, axis=-1)))
    psi = np.sqrt(np.max(np.sum((flat_perp[:, None] - flat_perp[None]) ** 2, axis=-1)))
    return float(rho), float(psi)


def subspace_distances(u_per_node, u_star):
    """Subspace distance from ``U*`` to each node's basis (batched)."""
    u = np.asarray(u_per_node, dtype=float)
    resid = u - u_star @ (np.swapaxes(u_star, 0, 1) @ u)
    return np.minimum(1.0, np.linalg.norm(resid, ord=2, axis=(1, 2)))


@dataclass
class StepReport:
    """Diagnostics recorded after one iteration (``tau = 0`` for initialization)."""

    tau: int
    sd: np.ndarray
    rho_hat: float
    psi_hat: float
    max_task_err: float
    rounds: RoundCounter
    comm_s: float
    compute_s: float

    @property
    def sd_node1(self):
        return float(self.sd[0])

    @property
    def sd_max(self):
        return float(np.max(self.sd))


@dataclass
class RunTrace:
    config: dict
    init: StepReport
    steps: list = field(default_factory=list)
    totals: RoundCounter = field(default_factory=RoundCounter)
    final_task_errors: Optional[np.ndarray] = None
    theta_hat: Optional[list] = None
    states: Optional[list] = None
    aborted: Optional[str] = None

    @property
    def reports(self):
        return [self.init, *self.steps]

    def cumulative(self, attr):
        return np.cumsum([getattr(rep, attr) for rep in self.reports])

    @property
    def comm_s_total(self):
        return float(sum(rep.comm_s for rep in self.reports))

    @property
    def compute_s_total(self):
        return float(sum(rep.compute_s for rep in self.reports))

    @property
    def final_sd(self):
        return self.reports[-1].sd
