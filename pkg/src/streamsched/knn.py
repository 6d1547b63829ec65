"""Exact K-nearest feasible actions for a continuous proto-action.

The policy network emits an N x M real matrix (the proto-action); the
deployable actions are the one-hot row matrices. Squared Euclidean distance
decomposes over rows:

    ||a - p||^2 = sum_i d_i(j_i),   d_i(j) = sum_k p_ik^2 - 2 p_ij + 1,

where j_i is the machine chosen for row i. Each row's candidate costs are
independent, so the K closest actions are the K smallest sums picked from N
sorted per-row lists. A best-first search over index vectors enumerates
those sums exactly without touching the M^N space: a node increments one
row past the position it last changed, which generates every index vector
once, in nondecreasing cost order.

Equal-distance actions are ordered by ascending lexicographic comparison of
their per-row machine vectors, both here and in the brute-force oracle.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import KTooLargeError, SpaceTooLargeError
from .topology import ScheduleMatrix

DEFAULT_SPACE_CAP = 4096


@dataclass(frozen=True)
class KnnResult:
    """K feasible actions ordered by distance to the proto-action."""

    actions: tuple[ScheduleMatrix, ...]
    distances: np.ndarray  # nondecreasing, aligned with actions

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "actions", tuple(self.actions))


def _check_proto(proto) -> np.ndarray:
    arr = np.asarray(proto, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"proto-action must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("proto-action entries must be finite")
    return arr


def row_deltas(proto) -> np.ndarray:
    """Per-row cost d_i(j) of assigning row i to machine j."""
    arr = _check_proto(proto)
    return (arr**2).sum(axis=1, keepdims=True) - 2.0 * arr + 1.0


def exact_distance(proto: np.ndarray, machines) -> float:
    """||onehot(machines) - proto||^2, computed directly."""
    arr = np.asarray(proto, dtype=float)
    onehot = np.zeros_like(arr)
    onehot[np.arange(arr.shape[0]), np.asarray(machines, dtype=np.int64)] = 1.0
    return float(np.sum((onehot - arr) ** 2))


def nearest_action(proto) -> ScheduleMatrix:
    """The single closest feasible action: per-row argmax of the proto.

    Ties go to the lowest machine index (argmax picks the first maximum).
    """
    arr = _check_proto(proto)
    return ScheduleMatrix.from_assignment(np.argmax(arr, axis=1), arr.shape[1])


def action_space_size(n_threads: int, n_machines: int) -> int:
    return n_machines**n_threads


def k_nearest_actions(proto, k: int) -> KnnResult:
    """The K feasible actions closest to the proto-action, exactly.

    Results come back sorted by (distance, machine vector); ``distances[k]``
    is the directly computed squared Euclidean distance of ``actions[k]``.
    Raises KTooLargeError when fewer than K feasible actions exist.
    """
    arr = _check_proto(proto)
    n, m = arr.shape
    if k < 1:
        raise KTooLargeError(f"k must be >= 1, got {k}")
    if k > action_space_size(n, m):
        raise KTooLargeError(f"k={k} exceeds the {m}^{n} feasible actions")

    deltas = (arr**2).sum(axis=1, keepdims=True) - 2.0 * arr + 1.0
    # Stable per-row order: by cost, then by machine index.
    order = np.lexsort((np.tile(np.arange(m), (n, 1)), deltas), axis=1)
    sorted_deltas = np.take_along_axis(deltas, order, axis=1)
    order_list = order.tolist()
    delta_list = sorted_deltas.tolist()

    base_sum = float(sorted_deltas[:, 0].sum())
    base_machines = tuple(row[0] for row in order_list)
    base_idx = (0,) * n
    # Heap entries: (cost, machine vector, per-row rank vector, first row allowed to advance)
    heap = [(base_sum, base_machines, base_idx, 0)]
    chosen: list[tuple] = []
    while heap and len(chosen) < k:
        cost, machines, idx, first = heapq.heappop(heap)
        chosen.append(machines)
        for row in range(first, n):
            nxt = idx[row] + 1
            if nxt >= m:
                continue
            child_cost = cost - delta_list[row][idx[row]] + delta_list[row][nxt]
            child_machines = machines[:row] + (order_list[row][nxt],) + machines[row + 1:]
            child_idx = idx[:row] + (nxt,) + idx[row + 1:]
            heapq.heappush(heap, (child_cost, child_machines, child_idx, row))

    scored = sorted((exact_distance(arr, mach), mach) for mach in chosen)
    actions = tuple(ScheduleMatrix.from_assignment(mach, m) for _, mach in scored)
    distances = np.array([d for d, _ in scored])
    return KnnResult(actions, distances)


def brute_force_knn(proto, k: int, *, space_cap: int = DEFAULT_SPACE_CAP) -> KnnResult:
    """Oracle: enumerate every feasible action and keep the K closest.

    Refuses spaces larger than ``space_cap`` actions. Uses the same direct
    distance computation and the same tie order as k_nearest_actions.
    """
    arr = _check_proto(proto)
    n, m = arr.shape
    size = action_space_size(n, m)
    if size > space_cap:
        raise SpaceTooLargeError(f"{m}^{n} = {size} actions exceed the cap of {space_cap}")
    if k < 1 or k > size:
        raise KTooLargeError(f"k={k} outside [1, {size}]")

    combos = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64)
    deltas = (arr**2).sum(axis=1, keepdims=True) - 2.0 * arr + 1.0
    sums = deltas[np.arange(n)[:, None], combos.T].sum(axis=0)
    # Full tie order: cost first, then machine vector lexicographically.
    keys = tuple(combos[:, col] for col in range(n - 1, -1, -1)) + (sums,)
    ranked = np.lexsort(keys)[:k]
    scored = sorted((exact_distance(arr, combos[i]), tuple(int(x) for x in combos[i])) for i in ranked)
    actions = tuple(ScheduleMatrix.from_assignment(mach, m) for _, mach in scored)
    distances = np.array([d for d, _ in scored])
    return KnnResult(actions, distances)
