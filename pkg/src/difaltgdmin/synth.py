"""Planted multi-task regression problems.

A problem is a rank-``r`` parameter matrix ``Theta* = U* B*`` (``d x T``),
Gaussian designs ``X_t`` (``n x d``) with noiseless responses
``y_t = X_t theta*_t``, and an assignment of the ``T`` tasks to ``L`` nodes.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, InvalidSpectrum
from .numerics import qr_positive


@dataclass(frozen=True)
class ProblemDims:
    d: int
    t_tasks: int
    r: int
    n: int
    l_nodes: int

    def __post_init__(self):
        for name in ("d", "t_tasks", "r", "n", "l_nodes"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.r > min(self.d, self.t_tasks):
            raise ValueError(f"r={self.r} exceeds min(d, T)={min(self.d, self.t_tasks)}")
        if self.l_nodes > self.t_tasks:
            raise ValueError(f"l_nodes={self.l_nodes} exceeds the task count {self.t_tasks}")


@dataclass(frozen=True)
class SpectrumSpec:
    """How ``B*`` is drawn.

    ``mode="gaussian"`` draws ``B*`` with i.i.d. standard normal entries.
    ``mode="spectrum"`` builds ``B* = Sigma V^T`` with singular values
    linearly spaced from 1 to `kappa` and a random orthonormal ``V``.
    """

    mode: str = "gaussian"
    kappa: float = 1.0

    def __post_init__(self):
        if self.mode not in ("gaussian", "spectrum"):
            raise InvalidSpectrum(f"unknown spectrum mode {self.mode!r}")
        if not self.kappa >= 1.0:
            raise InvalidSpectrum(f"target condition number must be >= 1, got {self.kappa}")


@dataclass(frozen=True)
class GroundTruth:
    u_star: np.ndarray
    b_star: np.ndarray
    theta_star: np.ndarray
    sigma_max: float
    sigma_min: float
    kappa: float
    mu: float


def incoherence(b_star, sigma_max):
    """Smallest ``mu >= 1`` with ``||b_t||^2 <= mu^2 (r/T) sigma_max^2`` for all t."""
    r, t_tasks = b_star.shape
    worst = float(np.max(np.sum(b_star**2, axis=0)))
    tight = math.sqrt(worst * t_tasks / (r * sigma_max**2))
    return max(1.0, tight)


def generate_ground_truth(dims, spectrum=None, seed=0):
    spectrum = spectrum or SpectrumSpec()
    rng = np.random.default_rng(seed)
    u_star, _ = qr_positive(rng.standard_normal((dims.d, dims.r)))
    if spectrum.mode == "gaussian":
        b_star = rng.standard_normal((dims.r, dims.t_tasks))
    else:
        v_star, _ = qr_positive(rng.standard_normal((dims.t_tasks, dims.r)))
        sigmas = np.linspace(spectrum.kappa, 1.0, dims.r)
        b_star = sigmas[:, None] * v_star.T
    theta_star = u_star @ b_star
    sv = np.linalg.svd(b_star, compute_uv=False)
    sigma_max, sigma_min = float(sv[0]), float(sv[-1])
    return GroundTruth(
        u_star=u_star,
        b_star=b_star,
        theta_star=theta_star,
        sigma_max=sigma_max,
        sigma_min=sigma_min,
        kappa=sigma_max / sigma_min,
        mu=incoherence(b_star, sigma_max),
    )


def balanced_partition(t_tasks, l_nodes):
    """Contiguous blocks of task indices whose sizes differ by at most one."""
    return [np.asarray(block, dtype=np.int64) for block in np.array_split(np.arange(t_tasks), l_nodes)]


def split_label_index(label):
    """Position of split `label` (``"00"``, ``"0"`` or an int >= 1) in ``splits``."""
    if label == "00":
        return 0
    if label == "0":
        return 1
    if isinstance(label, (int, np.integer)) and label >= 1:
        return int(label) + 1
    raise KeyError(f"bad split label {label!r}")


@dataclass
class TaskDataset:
    """Per-task designs and responses plus the node partition.

    ``x`` has shape ``(T, n, d)`` and ``y`` shape ``(T, n)``. ``partition[g]``
    lists the tasks held by node ``g`` (0-based). ``splits``, when present,
    is a list of ``2 T_GD + 2`` integer arrays of shape ``(T, size)`` holding
    the row indices of split ``00``, ``0``, ``1``, ..., ``2 T_GD`` for each task.
    """

    x: np.ndarray
    y: np.ndarray
    partition: list
    splits: Optional[list] = None

    @property
    def t_tasks(self):
        return self.x.shape[0]

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def d(self):
        return self.x.shape[2]

    @property
    def l_nodes(self):
        return len(self.partition)

    def node_of_task(self):
        owner = np.empty(self.t_tasks, dtype=np.int64)
        for g, tasks in enumerate(self.partition):
            owner[tasks] = g
        return owner

    def samples_in(self, label):
        """Per-task sample count seen under split `label`."""
        if self.splits is None:
            return self.n
        return self.splits[split_label_index(label)].shape[1]

    def view(self, label, tasks=None):
        """``(x, y)`` restricted to split `label` and the given tasks.

        With splitting off every label aliases the full data.
        """
        if tasks is None:
            tasks = slice(None)
        else:
            tasks = np.asarray(tasks)
            if tasks.size and np.array_equal(tasks, np.arange(tasks[0], tasks[0] + tasks.size)):
                tasks = slice(int(tasks[0]), int(tasks[0]) + tasks.size)
        if self.splits is None:
            return self.x[tasks], self.y[tasks]
        rows = self.splits[split_label_index(label)][tasks]
        owners = np.arange(self.t_tasks)[tasks][:, None]
        return self.x[owners, rows], self.y[owners, rows]


def generate_tasks(gt, dims, seed=0):
    if gt.theta_star.shape != (dims.d, dims.t_tasks):
        raise DimensionMismatch("ground truth does not match the problem dimensions")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((dims.t_tasks, dims.n, dims.d))
    y = np.einsum("tnd,dt->tn", x, gt.theta_star)
    return TaskDataset(x=x, y=y, partition=balanced_partition(dims.t_tasks, dims.l_nodes))


def split_samples(ds, t_gd, seed=0):
    """Return a copy of `ds` with a random equal partition of each task's rows.

    There are ``2 * t_gd + 2`` parts; their sizes differ by at most one and
    are the same for every task.
    """
    parts = 2 * t_gd + 2
    if ds.n < parts:
        raise InsufficientSamples(parts, ds.n)
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(ds.n), (ds.t_tasks, 1)), axis=1)
    splits = [np.ascontiguousarray(block) for block in np.array_split(perms, parts, axis=1)]
    return TaskDataset(x=ds.x, y=ds.y, partition=ds.partition, splits=splits)


# --- binary container -------------------------------------------------------
#
# magic (8 bytes) | header: 6 x <i8 (d, T, n, L, n_splits, 0)
# | task owner per task: T x <i8
# | split row indices, split by split, each (T, size) row-major: <i8
# | x: T*n*d x <f8 | y: T*n x <f8

MAGIC = b"DIFMTRL1"


def dump_dataset(ds, path):
    n_splits = 0 if ds.splits is None else len(ds.splits)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array([ds.d, ds.t_tasks, ds.n, ds.l_nodes, n_splits, 0], dtype="<i8").tobytes())
        fh.write(ds.node_of_task().astype("<i8").tobytes())
        for block in ds.splits or []:
            fh.write(np.ascontiguousarray(block, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(ds.x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ds.y, dtype="<f8").tobytes())


def load_dataset(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a dataset container")
    pos = 8

    def take(count, dtype):
        nonlocal pos
        nbytes = count * 8
        if pos + nbytes > len(raw):
            raise ValueError(f"{path}: truncated container")
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        pos += nbytes
        return arr

    d, t_tasks, n, l_nodes, n_splits, _ = (int(v) for v in take(6, "<i8"))
    owner = take(t_tasks, "<i8")
    splits = None
    if n_splits:
        sizes = [len(c) for c in np.array_split(np.arange(n), n_splits)]
        splits = [take(t_tasks * s, "<i8").reshape(t_tasks, s).astype(np.int64) for s in sizes]
    x = take(t_tasks * n * d, "<f8").reshape(t_tasks, n, d).astype(float)
    y = take(t_tasks * n, "<f8").reshape(t_tasks, n).astype(float)
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes in container")
    partition = [np.flatnonzero(owner == g).astype(np.int64) for g in range(l_nodes)]
    return TaskDataset(x=x, y=y, partition=partition, splits=splits)
