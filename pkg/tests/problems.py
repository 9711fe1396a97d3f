"""Small seeded problem instances shared by the tests."""

import numpy as np

from difaltgdmin import network, optimizer, spectral_init, synth
from difaltgdmin.seeding import stream_seed


def small_problem(d=20, t_tasks=12, r=2, n=15, l_nodes=4, seed=0, p=0.6):
    dims = synth.ProblemDims(d, t_tasks, r, n, l_nodes)
    gt = synth.generate_ground_truth(dims, seed=stream_seed(seed, "ground_truth"))
    ds = synth.generate_tasks(gt, dims, seed=stream_seed(seed, "tasks"))
    topo = network.erdos_renyi(l_nodes, p, seed=stream_seed(seed, "graph"))
    weights = network.metropolis_weights(topo)
    return dims, gt, ds, topo, weights


def complete(l_nodes):
    return network.from_edges(l_nodes, [(g, j) for g in range(l_nodes) for j in range(g + 1, l_nodes)])


def init_for(ds, topo, weights, dims, gt, t_pm=10, t_con=10, seed=0):
    params = spectral_init.InitParams(t_pm, t_con, gt.kappa, gt.mu, init_seed=stream_seed(seed, "init"))
    return spectral_init.run_init(ds, topo, weights, params, dims)


def states_at(u, l_nodes, r):
    return [optimizer.NodeState(u=u.copy(), r_factor=np.eye(r)) for _ in range(l_nodes)]
