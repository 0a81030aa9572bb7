"""Gradient projection memory and the lossless subspace update codec.

Per trunk layer we keep two orthonormal bases of the layer's input space:
``m`` (n x r) spans directions important to past tasks, ``o`` (n x (n-r))
spans its orthogonal complement.  Gradients are projected onto span(o)
before stepping, so updates cannot disturb what earlier tasks rely on; the
same fact makes model deltas expressible in ``o`` coordinates, which is
what the communication codec exploits: coefficients ``c = o^T q`` are
(n-r)/n the size of ``q`` and decode back exactly via ``q = o c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, frobenius_norm, orthonormal_complement, svd_full


@dataclass
class LayerBasis:
    m: np.ndarray  # (n, r), orthonormal columns
    o: np.ndarray  # (n, n - r), orthonormal complement

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @property
    def rank(self) -> int:
        return self.m.shape[1]

    def copy(self) -> "LayerBasis":
        return LayerBasis(self.m.copy(), self.o.copy())


@dataclass
class GpmState:
    layers: list[LayerBasis]

    @classmethod
    def fresh(cls, layer_dims: list[int]) -> "GpmState":
        # empty memory: nothing to protect, any direction is transmittable
        return cls(
            layers=[
                LayerBasis(m=np.zeros((n, 0)), o=np.eye(n)) for n in layer_dims
            ]
        )

    def copy(self) -> "GpmState":
        return GpmState(layers=[b.copy() for b in self.layers])

    def ranks(self) -> list[int]:
        return [b.rank for b in self.layers]


@dataclass(frozen=True)
class ThresholdSchedule:
    """Energy threshold for memory growth, raised a little after each task."""

    base: float
    increment_per_task: float = 0.0

    def value(self, task_index: int) -> float:
        eps = self.base + self.increment_per_task * task_index
        if not 0.0 < eps < 1.0:
            raise ValueError(
                f"threshold {eps} for task {task_index} is outside (0, 1)"
            )
        return eps


def project(g: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Remove the span(m) component of a gradient: g - m (m^T g).

    With an empty memory the gradient is returned unchanged, so the very
    first task trains without any constraint.
    """
    g = check_matrix(g, "gradient")
    m = check_matrix(m, "memory basis")
    if g.shape[0] != m.shape[0]:
        raise ValueError(
            f"gradient rows {g.shape[0]} do not match basis rows {m.shape[0]}"
        )
    return g - m @ (m.T @ g)


def update_memory(
    state: GpmState, reps: list[np.ndarray], eps_th: float
) -> GpmState:
    """Grow each layer's memory to cover a fraction eps_th of its input energy.

    For a representation matrix R (columns are samples) the residual
    (I - m m^T) R is factored by SVD and the minimal number k of leading
    left singular vectors is appended so that the retained energy
    ||m^T R||_F^2 + sum_{j<=k} s_j^2 reaches eps_th * ||R||_F^2.  Layers
    whose R already lies inside span(m) are left untouched.  Ranks never
    shrink.
    """
    if not 0.0 < eps_th < 1.0:
        raise ValueError(f"eps_th must lie in (0, 1), got {eps_th}")
    if len(reps) != len(state.layers):
        raise ValueError(
            f"got {len(reps)} representation matrices for {len(state.layers)} layers"
        )
    new_layers = []
    for basis, rep in zip(state.layers, reps):
        rep = check_matrix(rep, "representation")
        n = basis.dim
        if rep.shape[0] != n:
            raise ValueError(
                f"representation rows {rep.shape[0]} do not match layer dim {n}"
            )
        total = frobenius_norm(rep) ** 2
        if total == 0.0 or basis.rank == n:
            new_layers.append(basis.copy())
            continue
        covered = frobenius_norm(basis.m.T @ rep) ** 2
        target = eps_th * total
        if covered >= target:
            new_layers.append(basis.copy())
            continue
        residual = rep - basis.m @ (basis.m.T @ rep)
        u, s, _ = svd_full(residual)
        energies = covered + np.cumsum(s * s)
        reachable = np.flatnonzero(energies >= target)
        if reachable.size:
            k = int(reachable[0]) + 1
        else:
            k = int(np.sum(s > 0.0))  # take every direction with energy left
        k = min(k, n - basis.rank)
        if k == 0:
            new_layers.append(basis.copy())
            continue
        m_new = np.concatenate([basis.m, u[:, :k]], axis=1)
        new_layers.append(LayerBasis(m=m_new, o=orthonormal_complement(m_new)))
    return GpmState(layers=new_layers)


def encode(q: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Subspace coefficients o^T q of an update; empty when o has no columns."""
    q = check_matrix(q, "update")
    o = check_matrix(o, "complement basis")
    if q.shape[0] != o.shape[0]:
        raise ValueError(
            f"update rows {q.shape[0]} do not match basis rows {o.shape[0]}"
        )
    return o.T @ q


def decode(c: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Reconstruct an update o @ c from its subspace coefficients."""
    c = check_matrix(c, "coefficients")
    o = check_matrix(o, "complement basis")
    if c.shape[0] != o.shape[1]:
        raise ValueError(
            f"coefficient rows {c.shape[0]} do not match basis columns {o.shape[1]}"
        )
    if o.shape[1] == 0:
        return np.zeros((o.shape[0], c.shape[1]))
    return o @ c


def empirical_mu(g: np.ndarray, g_tilde: np.ndarray) -> float:
    """Norm ratio ||g_tilde|| / ||g||; defined as 1 for a zero gradient."""
    ng = frobenius_norm(g)
    if ng == 0.0:
        return 1.0
    return frobenius_norm(g_tilde) / ng


def descent_check(g: np.ndarray, g_tilde: np.ndarray) -> float:
    """Inner product <g, g_tilde>; equals ||g_tilde||^2 for a projection."""
    return float(np.sum(np.asarray(g) * np.asarray(g_tilde)))


def save_state(state: GpmState, path: str) -> None:
    """Serialize a memory state exactly (hex floats, column-major entries)."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("gpm-state 1\n")
        handle.write(f"layers {len(state.layers)}\n")
        for idx, basis in enumerate(state.layers):
            n, r = basis.m.shape
            handle.write(f"layer {idx} dim {n} rank {r}\n")
            for name, mat in (("m", basis.m), ("o", basis.o)):
                handle.write(f"{name} {mat.shape[1]}\n")
                for col in range(mat.shape[1]):
                    handle.write(
                        " ".join(float(v).hex() for v in mat[:, col]) + "\n"
                    )


def load_state(path: str) -> GpmState:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"{path}: truncated state file")
        line = lines[pos]
        pos += 1
        return line

    header = take()
    if header != "gpm-state 1":
        raise ValueError(f"{path}: unknown header {header!r}")
    count = int(take().split()[1])
    layers = []
    for _ in range(count):
        parts = take().split()
        n, r = int(parts[3]), int(parts[5])
        mats = {}
        for name, cols_expected in (("m", r), ("o", n - r)):
            sub = take().split()
            if sub[0] != name or int(sub[1]) != cols_expected:
                raise ValueError(f"{path}: malformed {name} block")
            cols = []
            for _ in range(cols_expected):
                cols.append([float.fromhex(v) for v in take().split()])
            mats[name] = (
                np.array(cols).T if cols else np.zeros((n, 0))
            )
        layers.append(LayerBasis(m=mats["m"], o=mats["o"]))
    return GpmState(layers=layers)
