"""Trial loops, sweeps and CSV output."""

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DifAltGDminError, RankDeficient
from ..metrics import CommModel, price_rounds
from ..network import (
    connectivity_bound,
    erdos_renyi,
    from_edges,
    metropolis_weights,
    write_edge_list,
)
from ..optimizer import Context, OptimizerParams, run
from ..seeding import stream_seed
from ..spectral_init import InitParams, run_init, run_init_central
from ..synth import ProblemDims, SpectrumSpec, generate_ground_truth, generate_tasks, split_samples
from .config import sweep_key

TRACE_COLUMNS = (
    "algorithm", "trial", "iter", "sd_node1", "sd_max", "rho_hat", "psi_hat", "max_task_err",
    "comm_s_cum", "compute_s_cum", "rounds_cum",
    "comm_s_cum_excl_init", "compute_s_cum_excl_init", "rounds_cum_excl_init",
)
VALUE_COLUMNS = TRACE_COLUMNS[3:]
TRIAL_COLUMNS = (
    "algorithm", "trial", "gamma", "gamma_bound", "ecc_node1", "max_degree", "n_edges",
    "graph_retries", "eta", "kappa", "mu", "final_sd_node1", "comm_s_total", "aborted",
)


def fmt(value):
    """Decimal text with 17 significant digits (round-trips a double)."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


@dataclass
class TrialResult:
    algorithm: str
    trial: int
    rows: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    aborted: str = ""
    topology: object = None


class _ZeroClock:
    """Clock that never advances, for byte-reproducible compute columns."""

    def __call__(self):
        return 0.0


def trial_inputs(cfg, trial):
    """Seeded ground truth, data and graph of one trial (shared by all algorithms)."""
    dims = ProblemDims(cfg.d, cfg.t_tasks, cfg.r, cfg.n, cfg.l_nodes)
    spectrum = SpectrumSpec(cfg.spectrum, cfg.kappa)
    gt = generate_ground_truth(dims, spectrum, seed=stream_seed(cfg.master_seed, "ground_truth", trial))
    ds = generate_tasks(gt, dims, seed=stream_seed(cfg.master_seed, "tasks", trial))
    if cfg.sample_split:
        ds = split_samples(ds, cfg.t_gd, seed=stream_seed(cfg.master_seed, "splits", trial))
    if cfg.l_nodes == 1:
        topo = from_edges(1, [], p=cfg.p)
    else:
        graph_key = 0 if cfg.graph_policy == "fixed" else trial
        topo = erdos_renyi(cfg.l_nodes, cfg.p, seed=stream_seed(cfg.master_seed, "graph", graph_key),
                           max_retries=cfg.max_retries)
    return dims, gt, ds, topo


@dataclass
class Simulation:
    trace: object
    topology: object
    weights: object
    ground_truth: object
    init: object


def simulate(cfg, algorithm, trial, clock=None):
    """Seeded inputs, initialization and full run of one (algorithm, trial) pair.

    Raises :class:`RankDeficient` when the initialization breaks down; a
    breakdown during the iterations is reported in ``trace.aborted``.
    """
    if clock is None:
        clock = time.perf_counter if cfg.compute_time == "measured" else _ZeroClock()
    dims, gt, ds, topo = trial_inputs(cfg, trial)
    weights = metropolis_weights(topo)
    if cfg.hints == "ground_truth":
        kappa_hint, mu_hint = gt.kappa, gt.mu
    else:
        kappa_hint, mu_hint = cfg.kappa_hint, cfg.mu_hint
    init_params = InitParams(
        t_pm=cfg.t_pm, t_con_init=cfg.t_con_init, kappa_hint=kappa_hint, mu_hint=mu_hint,
        init_seed=stream_seed(cfg.master_seed, "init", trial),
    )
    opt_params = OptimizerParams(
        t_gd=cfg.t_gd, t_con_gd=cfg.t_con_gd, eta=cfg.eta, c_eta=cfg.c_eta, algorithm=algorithm,
        sample_split=cfg.sample_split, dgd_include_self=cfg.dgd_include_self,
    )
    comm = CommModel(cfg.latency, cfg.bandwidth, cfg.bytes_per_scalar)
    if algorithm == "altgdmin_central":
        init = run_init_central(ds, init_params, dims, clock=clock)
    else:
        init = run_init(ds, topo, weights, init_params, dims, clock=clock)
    ctx = Context(ds=ds, topo=topo, weights=weights, gt=gt, comm=comm, clock=clock)
    trace = run(ctx, init, opt_params)
    return Simulation(trace=trace, topology=topo, weights=weights, ground_truth=gt, init=init)


def run_trial(cfg, algorithm, trial):
    """Run one (algorithm, trial) pair and return its trace rows."""
    result = TrialResult(algorithm=algorithm, trial=trial)
    try:
        sim = simulate(cfg, algorithm, trial)
    except RankDeficient as exc:
        result.aborted = f"init: {exc}"
        return result
    trace, topo, gt = sim.trace, sim.topology, sim.ground_truth
    result.topology = topo
    result.aborted = trace.aborted or ""

    comm_s = np.array([rep.comm_s for rep in trace.reports])
    compute_s = np.array([rep.compute_s for rep in trace.reports])
    rounds = np.array([rep.rounds.total_rounds for rep in trace.reports])
    cums = [np.cumsum(col) for col in (comm_s, compute_s, rounds)]
    # same sums with the init report left out
    excl = [np.concatenate([[0], np.cumsum(col[1:])]) for col in (comm_s, compute_s, rounds)]
    for k, rep in enumerate(trace.reports):
        result.rows.append((
            algorithm, trial, rep.tau, rep.sd_node1, rep.sd_max, rep.rho_hat, rep.psi_hat,
            rep.max_task_err, cums[0][k], cums[1][k], int(cums[2][k]),
            excl[0][k], excl[1][k], int(excl[2][k]),
        ))
    comm = CommModel(cfg.latency, cfg.bandwidth, cfg.bytes_per_scalar)
    result.info = {
        "gamma": sim.weights.gamma,
        "gamma_bound": connectivity_bound(cfg.l_nodes, cfg.eps_con, cfg.t_con_gd) if cfg.t_con_gd else float("nan"),
        "ecc_node1": topo.ecc_node1,
        "max_degree": topo.max_degree,
        "n_edges": topo.n_edges,
        "graph_retries": topo.retries,
        "eta": trace.config["eta"],
        "kappa": gt.kappa,
        "mu": gt.mu,
        "final_sd_node1": trace.reports[-1].sd_node1,
        "comm_s_total": price_rounds(trace.totals, comm, cfg.d, cfg.r, topo.max_degree, cfg.l_nodes),
    }
    return result


def _run_job(job):
    cfg, algorithm, trial = job
    try:
        return run_trial(cfg, algorithm, trial)
    except DifAltGDminError as exc:
        # e.g. no connected graph within the retry budget
        return TrialResult(algorithm=algorithm, trial=trial, aborted=f"{type(exc).__name__}: {exc}")


def run_trials(cfg, threads=1):
    """All (algorithm, trial) results in deterministic (algorithm, trial) order."""
    jobs = [(cfg, alg, k) for alg in cfg.algorithms for k in range(cfg.trials)]
    if threads <= 1 or len(jobs) == 1:
        return [_run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_job, jobs))


def summarize(results, algorithms):
    """Per-(algorithm, iter) means across the trials that reached that iteration."""
    out = []
    for alg in algorithms:
        by_iter = {}
        for res in results:
            if res.algorithm != alg:
                continue
            for row in res.rows:
                by_iter.setdefault(row[2], []).append(row[3:])
        for it in sorted(by_iter):
            block = np.array(by_iter[it], dtype=float)
            out.append((alg, it, len(block), *np.mean(block, axis=0)))
    return out


SUMMARY_COLUMNS = ("algorithm", "iter", "n_trials", *VALUE_COLUMNS)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


@dataclass
class ExperimentOutput:
    out_dir: Path
    results: list
    summary: list

    @property
    def trace_csv(self):
        return self.out_dir / "trace.csv"

    @property
    def summary_csv(self):
        return self.out_dir / "summary.csv"

    @property
    def n_aborted(self):
        return sum(1 for res in self.results if res.aborted)


def run_experiment(cfg, out_dir, threads=1):
    """Run every algorithm on every trial and write the output directory.

    Files: ``config.ini`` (resolved config), ``trace.csv`` (long format, one
    row per algorithm/trial/iteration), ``summary.csv`` (per-iteration means),
    ``trials.csv`` (per-trial graph and step-size facts), ``aborts.csv`` and
    ``graphs/trial_<k>.edges`` (1-indexed edge lists).
    """
    out_dir = Path(out_dir)
    (out_dir / "graphs").mkdir(parents=True, exist_ok=True)
    results = run_trials(cfg, threads)
    summary = summarize(results, cfg.algorithms)

    _write(out_dir / "config.ini", cfg.to_ini())
    _write(out_dir / "trace.csv", _csv_text(TRACE_COLUMNS, [row for res in results for row in res.rows]))
    _write(out_dir / "summary.csv", _csv_text(SUMMARY_COLUMNS, summary))
    _write(out_dir / "trials.csv", _csv_text(
        TRIAL_COLUMNS,
        [(res.algorithm, res.trial, *(res.info.get(c, float("nan")) for c in TRIAL_COLUMNS[2:-1]), res.aborted)
         for res in results],
    ))
    _write(out_dir / "aborts.csv", _csv_text(
        ("algorithm", "trial", "reason"),
        [(res.algorithm, res.trial, res.aborted) for res in results if res.aborted],
    ))
    written = set()
    for res in results:
        if res.trial in written or res.topology is None:
            continue
        written.add(res.trial)
        write_edge_list(res.topology, out_dir / "graphs" / f"trial_{res.trial}.edges")
    return ExperimentOutput(out_dir=out_dir, results=results, summary=summary)


def run_sweep(spec, out_dir, threads=1):
    """One experiment per axis value in ``<out>/<axis>=<value>/`` plus a merged summary.

    The merged ``summary.csv`` prepends a column named after the axis.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    merged = []
    for value in spec.values:
        key = sweep_key(value)
        cfg = spec.base.with_axis_value(spec.axis, value)
        sub = run_experiment(cfg, out_dir / f"{spec.axis}={key}", threads)
        outputs.append(sub)
        merged.extend((key, *row) for row in sub.summary)
    _write(out_dir / "summary.csv", _csv_text((spec.axis, *SUMMARY_COLUMNS), merged))
    return outputs


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

