"""Named deterministic random streams.

Every random draw in a trial comes from a stream identified by a name
(``"graph"``, ``"ground_truth"``, ...) and a tuple of integer keys (the
trial index, typically), all derived from one master seed. Streams are
independent of each other, so e.g. changing the node count (which only
affects the ``"graph"`` stream) leaves the generated dataset untouched.
"""

import zlib

import numpy as np

STREAMS = ("graph", "ground_truth", "tasks", "init", "splits")


def stream_seed(master_seed, name, *keys):
    """SeedSequence for stream `name` under `master_seed`, indexed by `keys`."""
    if name not in STREAMS:
        raise ValueError(f"unknown stream {name!r}; expected one of {STREAMS}")
    tag = zlib.crc32(name.encode("ascii"))
    return np.random.SeedSequence(int(master_seed), spawn_key=(tag, *map(int, keys)))


def stream(master_seed, name, *keys):
    return np.random.default_rng(stream_seed(master_seed, name, *keys))
