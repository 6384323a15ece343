"""In-process simulation of a stream split round-robin across M machines."""
from __future__ import annotations

from .coreset import Coreset, CoresetParams
from .exceptions import EmptyStream, InvalidConfig
from .stream import StreamState, merge
from .vector import SparseVector


class Cluster:
    """M independent merge-and-reduce streams plus a collecting server.

    The ``i``-th point of the stream (0-based) goes to machine ``i % M``.
    :meth:`collect` is non-destructive, so machines keep streaming after a
    snapshot; ``comm_log`` counts the points shipped to the server so far.
    """

    def __init__(self, params: CoresetParams, leaf_size: int, machines: int = 2):
        if machines < 1:
            raise InvalidConfig(f"need at least one machine, got {machines}")
        self.M = int(machines)
        self.machines = [StreamState(params, leaf_size) for _ in range(self.M)]
        self.route_counter = 0
        self.comm_log = 0

    def route_insert(self, p: SparseVector) -> "Cluster":
        self.machines[self.route_counter % self.M].insert(p)
        self.route_counter += 1
        return self

    def extend(self, points) -> "Cluster":
        for p in points:
            self.route_insert(p)
        return self

    def loads(self) -> list[int]:
        return [m.total_count for m in self.machines]

    def collect(self) -> Coreset:
        parts = []
        for i, m in enumerate(self.machines):
            if not m.total_count:
                continue
            c = m.finalize()
            # machine-local ordinal k is global ordinal k*M + i
            parts.append(Coreset(c.points, c.source_indices * self.M + i, c.weights,
                                 c.represented_count, c.represented_weight))
        if not parts:
            raise EmptyStream("no machine has received a point")
        self.comm_log += sum(len(c) for c in parts)
        result = parts[0]
        for c in parts[1:]:
            result = Coreset.from_point_set(merge(result, c))
        return result


def route_insert(cluster: Cluster, p: SparseVector) -> Cluster:
    return cluster.route_insert(p)


def collect(cluster: Cluster) -> Coreset:
    return cluster.collect()
