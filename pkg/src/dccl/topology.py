"""Communication graphs and their gossip mixing matrices.

Supported graph kinds: a directed ring, a 2-D torus (row-major node ids,
duplicate edges from 1- or 2-row/column wraparound merged), a fully
connected graph, and a custom undirected adjacency loaded from a text file.
Mixing weights are Metropolis style, 1/(1 + max degree) per edge with the
remainder on the self loop, which reduces to the uniform 1/(deg+1) rule on
regular graphs and is doubly stochastic on any connected graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_matrix, spectral_radius_nontrivial

_RESIDUAL_TOL = 1e-12
_GAP_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    kind: str  # "ring" | "torus" | "full" | "custom"
    n: int
    rows: int = 0
    cols: int = 0
    adjacency: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("ring", "torus", "full", "custom"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("topology needs at least one node")


@dataclass
class MixingMatrix:
    w: np.ndarray
    topology: Topology
    sqrt_rho: float


@dataclass
class Assumption3Report:
    row_residual: float
    col_residual: float
    entries_in_range: bool
    sqrt_rho: float
    passed: bool

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        return [
            f"row-sum residual:    {self.row_residual:.3e}",
            f"column-sum residual: {self.col_residual:.3e}",
            f"entries in [0, 1]:   {'yes' if self.entries_in_range else 'no'}",
            f"sqrt(rho):           {self.sqrt_rho:.12f}",
            f"assumption check:    {status}",
        ]


def parse_topology(text: str, n: int) -> Topology:
    """Parse a topology spec string: ring, torus:RxC, full, custom:<path>."""
    text = text.strip()
    if text == "ring":
        return Topology("ring", n)
    if text == "full":
        return Topology("full", n)
    if text.startswith("torus:"):
        dims = text[len("torus:"):].lower().split("x")
        if len(dims) != 2:
            raise ValueError(f"torus spec must look like torus:RxC, got {text!r}")
        try:
            rows, cols = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise ValueError(f"bad torus dimensions in {text!r}") from exc
        if rows < 1 or cols < 1:
            raise ValueError("torus dimensions must be positive")
        if rows * cols != n:
            raise ValueError(
                f"torus {rows}x{cols} has {rows * cols} nodes "
                f"but {n} agents were requested"
            )
        return Topology("torus", n, rows=rows, cols=cols)
    if text.startswith("custom:"):
        return load_custom_topology(text[len("custom:"):], n)
    raise ValueError(f"unknown topology spec {text!r}")


def load_custom_topology(path: str, n: int) -> Topology:
    """Read a 0/1 adjacency matrix, one space-separated row per line."""
    rows: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            entries = []
            for token in line.split():
                if token not in ("0", "1"):
                    raise ValueError(
                        f"{path}:{lineno}: adjacency entries must be 0 or 1, "
                        f"got {token!r}"
                    )
                entries.append(int(token))
            rows.append(entries)
    if not rows:
        raise ValueError(f"{path}: adjacency file is empty")
    size = len(rows)
    for lineno, entries in enumerate(rows, start=1):
        if len(entries) != size:
            raise ValueError(
                f"{path}:{lineno}: expected {size} entries, got {len(entries)}"
            )
    adj = np.array(rows, dtype=np.float64)
    if size != n:
        raise ValueError(
            f"{path}: adjacency is {size}x{size} but {n} agents were requested"
        )
    if not np.array_equal(adj, adj.T):
        raise ValueError(f"{path}: custom adjacency must be symmetric")
    np.fill_diagonal(adj, 1.0)  # self loops are always present
    topology = Topology("custom", n, adjacency=adj)
    _check_connected(topology)
    return topology


def neighbors(topology: Topology, i: int) -> list[int]:
    """In-neighborhood of node i, self included (the weights row support)."""
    n = topology.n
    if not 0 <= i < n:
        raise ValueError(f"node {i} outside 0..{n - 1}")
    if n == 1:
        return [0]
    if topology.kind == "ring":
        return [i, (i + 1) % n]
    if topology.kind == "full":
        return [i] + [j for j in range(n) if j != i]
    if topology.kind == "torus":
        r, c = divmod(i, topology.cols)
        seen: list[int] = [i]
        for rr, cc in (
            ((r - 1) % topology.rows, c),
            ((r + 1) % topology.rows, c),
            (r, (c - 1) % topology.cols),
            (r, (c + 1) % topology.cols),
        ):
            j = rr * topology.cols + cc
            if j not in seen:
                seen.append(j)
        return seen
    adj = topology.adjacency
    assert adj is not None
    return [i] + [j for j in range(n) if j != i and adj[i, j] > 0]


def _degrees(topology: Topology) -> list[int]:
    return [len(neighbors(topology, i)) - 1 for i in range(topology.n)]


def _check_connected(topology: Topology) -> None:
    n = topology.n
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in neighbors(topology, i):
            if j not in seen:
                seen.add(j)
                frontier.append(j)
    if len(seen) != n:
        raise ValueError(
            "graph is disconnected: consensus is unreachable "
            f"(reached {len(seen)} of {n} nodes)"
        )


def build_mixing(topology: Topology) -> MixingMatrix:
    """Construct the gossip weight matrix for a topology.

    The directed ring places 1/2 on the self loop and 1/2 on the successor;
    every other kind uses Metropolis weights on the undirected edge set.
    """
    n = topology.n
    _check_connected(topology)
    w = np.zeros((n, n))
    if n == 1:
        w[0, 0] = 1.0
    elif topology.kind == "ring":
        for i in range(n):
            w[i, i] = 0.5
            w[i, (i + 1) % n] = 0.5
    else:
        degs = _degrees(topology)
        for i in range(n):
            for j in neighbors(topology, i):
                if j == i:
                    continue
                w[i, j] = 1.0 / (1.0 + max(degs[i], degs[j]))
            w[i, i] = 1.0 - float(np.sum(w[i]))
    return MixingMatrix(w=w, topology=topology, sqrt_rho=spectral_radius_nontrivial(w))


def validate_assumption3(w: np.ndarray | MixingMatrix) -> Assumption3Report:
    """Check double stochasticity and the spectral gap of a weight matrix.

    Never raises for a finite square input; failures are carried in the
    report so the caller can print them.
    """
    mat = w.w if isinstance(w, MixingMatrix) else check_matrix(w, "mixing matrix")
    row_res = float(np.max(np.abs(mat.sum(axis=1) - 1.0)))
    col_res = float(np.max(np.abs(mat.sum(axis=0) - 1.0)))
    in_range = bool(np.all(mat >= -1e-15) and np.all(mat <= 1.0 + 1e-15))
    sums_ok = max(row_res, col_res) <= _RESIDUAL_TOL
    if sums_ok:
        sqrt_rho = spectral_radius_nontrivial(mat)
    else:
        sqrt_rho = math.nan
    passed = sums_ok and sqrt_rho <= 1.0 - _GAP_TOL
    return Assumption3Report(
        row_residual=row_res,
        col_residual=col_res,
        entries_in_range=in_range,
        sqrt_rho=sqrt_rho,
        passed=passed,
    )
