"""Alternating GD/minimization over a network, and its baselines.

Four update rules share the same per-node building blocks (least-squares
coefficients, local gradient, QR projection):

``dif_altgdmin``
    local gradient step, then agreement on the updated bases (diffusion).
``altgdmin_central``
    a server sums the exact gradient and broadcasts one basis.
``dec_altgdmin``
    agreement on the gradients only; each node projects its own basis.
``dgd_variant``
    one neighbour average of the bases minus the local gradient step.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import NonpositiveEstimate, RankDeficient
from .metrics import (
    CommModel,
    RoundCounter,
    RunTrace,
    StepReport,
    internode_gaps,
    price_rounds,
    subspace_distances,
    task_errors,
)
from .network import agree
from .numerics import least_squares, qr_positive

ALGORITHMS = ("dif_altgdmin", "altgdmin_central", "dec_altgdmin", "dgd_variant")


@dataclass(frozen=True)
class OptimizerParams:
    t_gd: int
    t_con_gd: int = 1
    eta: Union[float, str] = "auto"
    c_eta: float = 0.4
    algorithm: str = "dif_altgdmin"
    sample_split: bool = False
    dgd_include_self: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.t_gd < 0 or self.t_con_gd < 0:
            raise ValueError("t_gd and t_con_gd must be >= 0")
        if not 0 < self.c_eta < 0.5:
            raise ValueError(f"c_eta must lie in (0, 0.5), got {self.c_eta}")
        if not isinstance(self.eta, str) and not self.eta >= 0:
            raise ValueError(f"explicit eta must be nonnegative, got {self.eta}")
        if isinstance(self.eta, str) and self.eta not in ("auto", "theory"):
            raise ValueError(f"eta must be a number, 'auto' or 'theory', got {self.eta!r}")


@dataclass
class NodeState:
    u: np.ndarray
    b: Optional[np.ndarray] = None
    r_factor: Optional[np.ndarray] = None
    # basis the current b was fitted against; U_{tau-1} b_tau is the task estimate
    u_fit: Optional[np.ndarray] = None


@dataclass
class Context:
    """Everything a step needs besides the node states.

    `topo`/`weights` may be ``None`` for the centralized baseline; `gt` is
    only used for the diagnostics in the step report.
    """

    ds: object
    topo: object = None
    weights: object = None
    gt: object = None
    comm: CommModel = field(default_factory=CommModel)
    counter: RoundCounter = field(default_factory=RoundCounter)
    clock: object = time.perf_counter

    def layout(self):
        """``(owner, order, starts)``: task-to-node map and node-sorted segment offsets."""
        if getattr(self, "_layout", None) is None:
            owner = self.ds.node_of_task()
            order = np.concatenate(self.ds.partition)
            sizes = [len(tasks) for tasks in self.ds.partition]
            starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
            self._layout = (owner, order, starts)
        return self._layout

    @property
    def max_degree(self):
        return self.topo.max_degree if self.topo is not None else 0


def min_step_b(u, x, y, xu=None):
    """Least-squares coefficients for every task given the basis `u`.

    `x` is ``(k, n, d)``, `y` is ``(k, n)``; returns ``B`` of shape ``(r, k)``.
    A precomputed ``xu = x @ u`` may be passed to skip the product.
    """
    if xu is None:
        xu = x @ u
    return least_squares(xu, y).T


def local_gradient(u, b, x, y, xu=None):
    """``sum_t X_t^T (X_t U b_t - y_t) b_t^T``, the ``U``-gradient of :func:`objective`."""
    if xu is None:
        xu = x @ u
    resid = np.matmul(xu, b.T[:, :, None])[..., 0] - y
    return np.matmul(resid[:, None, :], x)[:, 0, :].T @ b.T


def objective(u, b, x, y):
    """``sum_t ||y_t - X_t U b_t||^2 / 2``, whose ``U``-gradient is :func:`local_gradient`."""
    resid = np.einsum("knd,dk->kn", x, u @ b) - y
    return 0.5 * float(np.sum(resid**2))


def auto_step_size(init, n_effective, c_eta=0.4):
    """``c_eta / (n * max diag R)`` from node 1's last power-method ``R`` factor."""
    top = float(np.max(np.diag(init.r_final)))
    if not top > 0:
        raise NonpositiveEstimate(f"largest diagonal entry of R is {top}")
    return c_eta / (n_effective * top)


def theory_step_size(gt, n_effective, c_eta=0.4):
    return c_eta / (n_effective * gt.sigma_max**2)


def _gradient_samples(ds, params):
    return ds.samples_in(params.t_gd + 1) if ds.splits is not None else ds.n


def resolve_step_size(params, init, ds, gt=None):
    n_eff = _gradient_samples(ds, params)
    if params.eta == "auto":
        return auto_step_size(init, n_eff, params.c_eta)
    if params.eta == "theory":
        if gt is None:
            raise ValueError("eta='theory' needs the ground truth")
        return theory_step_size(gt, n_eff, params.c_eta)
    return float(params.eta)


def _labels(params, tau):
    return tau, tau + params.t_gd


def local_updates(states, ctx, params, tau, eta):
    """Per-node min step, gradient and ``U - eta L grad``.

    All tasks are processed in one batched pass (task ``t`` uses the basis
    of the node that owns it); the measured time is attributed to the
    nodes in proportion to their task counts.

    Returns ``(ubreve, grads, bs, node_seconds)`` with ``ubreve``/``grads``
    stacked over nodes.
    """
    ds = ctx.ds
    l_nodes = ds.l_nodes
    lab_min, lab_grad = _labels(params, tau)
    owner, order, starts = ctx.layout()
    t0 = ctx.clock()
    u = np.stack([s.u for s in states])
    u_task = u[owner]
    x, y = ds.view(lab_min)
    xu = np.matmul(x, u_task)
    b_all = least_squares(xu, y)
    if ds.splits is not None:
        x, y = ds.view(lab_grad)
        xu = np.matmul(x, u_task)
    resid = np.matmul(xu, b_all[:, :, None])[..., 0] - y
    xt_resid = np.matmul(resid[:, None, :], x)[:, 0, :]
    per_task = xt_resid[:, :, None] * b_all[:, None, :]
    grads = np.add.reduceat(per_task[order], starts, axis=0)
    ubreve = u - (eta * l_nodes) * grads
    elapsed = ctx.clock() - t0
    bs = [b_all[tasks].T for tasks in ds.partition]
    sizes = np.array([len(tasks) for tasks in ds.partition], dtype=float)
    seconds = elapsed * sizes / sizes.sum()
    return ubreve, grads, bs, seconds


def _project(mats, ctx, seconds):
    t0 = ctx.clock()
    q, r = qr_positive(np.asarray(mats))
    seconds += (ctx.clock() - t0) / len(seconds)
    return list(zip(q, r))


def _report(tau, states, ctx, rounds, compute_s):
    u = np.stack([s.u for s in states])
    comm_s = price_rounds(rounds, ctx.comm, ctx.ds.d, u.shape[-1], ctx.max_degree, ctx.ds.l_nodes)
    if ctx.gt is None:
        sd = np.full(len(states), np.nan)
        rho = psi = max_err = np.nan
    else:
        sd = subspace_distances(u, ctx.gt.u_star)
        rho, psi = internode_gaps(u, ctx.gt.u_star)
        if states[0].b is None:
            max_err = np.nan
        else:
            errs = task_errors([s.u_fit for s in states], [s.b for s in states], ctx.ds.partition, ctx.gt.theta_star)
            max_err = float(np.max(errs))
    return StepReport(
        tau=tau, sd=sd, rho_hat=rho, psi_hat=psi, max_task_err=max_err,
        rounds=rounds, comm_s=comm_s, compute_s=compute_s,
    )


def dif_altgdmin_step(states, ctx, params, tau, eta):
    before = ctx.counter.snapshot()
    ubreve, _, bs, seconds = local_updates(states, ctx, params, tau, eta)
    mixed = agree(ubreve, ctx.weights, params.t_con_gd, ctx.counter)
    factors = _project(mixed, ctx, seconds)
    new = [NodeState(u=q, b=b, r_factor=r, u_fit=s.u) for (q, r), b, s in zip(factors, bs, states)]
    return new, _report(tau, new, ctx, ctx.counter.since(before), float(seconds.max()))


def altgdmin_central_step(states, ctx, params, tau, eta):
    before = ctx.counter.snapshot()
    _, grads, bs, seconds = local_updates(states, ctx, params, tau, eta)
    total = np.zeros_like(grads[0])
    for grad in grads:  # fixed node order
        total += grad
    t0 = ctx.clock()
    q, r = qr_positive(states[0].u - eta * total)
    server_s = ctx.clock() - t0
    ctx.counter.central_rounds += 1
    new = [NodeState(u=q.copy(), b=b, r_factor=r.copy(), u_fit=s.u) for b, s in zip(bs, states)]
    return new, _report(tau, new, ctx, ctx.counter.since(before), float(seconds.max()) + server_s)


def dec_altgdmin_step(states, ctx, params, tau, eta):
    before = ctx.counter.snapshot()
    _, grads, bs, seconds = local_updates(states, ctx, params, tau, eta)
    mixed = agree(grads, ctx.weights, params.t_con_gd, ctx.counter)
    l_nodes = ctx.ds.l_nodes
    stepped = [s.u - eta * l_nodes * gm for s, gm in zip(states, mixed)]
    factors = _project(stepped, ctx, seconds)
    new = [NodeState(u=q, b=b, r_factor=r, u_fit=s.u) for (q, r), b, s in zip(factors, bs, states)]
    return new, _report(tau, new, ctx, ctx.counter.since(before), float(seconds.max()))


def dgd_variant_step(states, ctx, params, tau, eta):
    before = ctx.counter.snapshot()
    _, grads, bs, seconds = local_updates(states, ctx, params, tau, eta)
    topo = ctx.topo
    stepped = []
    for g, nbrs in enumerate(topo.adjacency):
        if not nbrs and not params.dgd_include_self:
            raise ValueError(f"node {g + 1} has no neighbours")
        members = list(nbrs) + ([g] if params.dgd_include_self else [])
        avg = sum(states[j].u for j in members) / len(members)
        stepped.append(avg - eta * grads[g])
    ctx.counter.agree_rounds += 1
    ctx.counter.matrix_messages += 2 * topo.n_edges
    factors = _project(stepped, ctx, seconds)
    new = [NodeState(u=q, b=b, r_factor=r, u_fit=s.u) for (q, r), b, s in zip(factors, bs, states)]
    return new, _report(tau, new, ctx, ctx.counter.since(before), float(seconds.max()))


STEPS = {
    "dif_altgdmin": dif_altgdmin_step,
    "altgdmin_central": altgdmin_central_step,
    "dec_altgdmin": dec_altgdmin_step,
    "dgd_variant": dgd_variant_step,
}


def run(ctx, init, params):
    """Run ``params.t_gd`` iterations from the initialization `init`.

    The trace starts with the initialization report (``tau = 0``). On a
    rank-deficient iterate the run stops and the partial trace is returned
    with ``aborted`` set.
    """
    step = STEPS[params.algorithm]
    ctx.counter = init.rounds.snapshot()
    eta = resolve_step_size(params, init, ctx.ds, ctx.gt)
    states = [NodeState(u=u.copy(), r_factor=init.r_final.copy()) for u in init.u0]
    trace = RunTrace(
        config={**vars(params), "eta": eta},
        init=_report(0, states, ctx, init.rounds.snapshot(), init.compute_s),
    )
    for tau in range(1, params.t_gd + 1):
        try:
            states, report = step(states, ctx, params, tau, eta)
        except RankDeficient as exc:
            trace.aborted = f"iteration {tau}: {exc}"
            break
        trace.steps.append(report)
    trace.totals = ctx.counter.snapshot()
    if states[0].b is not None and ctx.gt is not None:
        trace.final_task_errors = task_errors(
            [s.u_fit for s in states], [s.b for s in states], ctx.ds.partition, ctx.gt.theta_star
        )
    trace.theta_hat = [s.u @ s.b if s.b is not None else None for s in states]
    trace.states = states
    return trace


def theorem_schedule(kappa, d, r, l_nodes, gamma, eps, c=1.0):
    """Round counts of the convergence theorem with a user-chosen constant `c`.

    Returns a dict with ``t_pm``, ``t_con_init``, ``t_gd`` and ``t_con_gd``;
    the agreement counts are 1 when ``gamma == 0`` (exact averaging).
    """
    inv_log_gamma = 0.0 if gamma <= 0 else 1.0 / math.log(1.0 / gamma)
    log = math.log
    return {
        "t_pm": max(1, math.ceil(c * kappa**2 * (log(d) + log(kappa)))),
        "t_con_init": max(1, math.ceil(c * inv_log_gamma * (log(l_nodes) + log(d) + log(r) + log(kappa)))),
        "t_gd": max(1, math.ceil(c * kappa**2 * log(1.0 / eps))),
        "t_con_gd": max(1, math.ceil(c * inv_log_gamma * (log(l_nodes) + log(r) + log(kappa)))),
    }
