"""Weight matrices, network states, activation potentials and energy.

Weights are held as an ``(n, n, 4)`` float array and, for fast matrix-vector
work, as the real ``(4n, 4n)`` matrix of left multiplications: row block ``i``
maps the stacked state ``x`` to ``v_i = sum_j w_ij x_j``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .quaternion import NotRepresentable, Quaternion, compose_angles, mul4, phase_angles4

TWO_PI = 2.0 * math.pi
# Accepted deviation from |x_i| = 1 when constructing states from external data.
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class ResolutionFactors:
    K1: int
    K2: int
    K3: int

    def __post_init__(self):
        for k in (self.K1, self.K2, self.K3):
            if int(k) != k or k < 1:
                raise ValueError(f"resolution factors must be positive integers, got {k!r}")

    @classmethod
    def uniform(cls, k: int) -> ResolutionFactors:
        return cls(k, k, k)

    @property
    def dphi(self) -> float:
        return 2.0 * math.pi / self.K1

    @property
    def dpsi(self) -> float:
        return math.pi / (2.0 * self.K2)

    @property
    def dtheta(self) -> float:
        return math.pi / self.K3

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.K1, self.K2, self.K3)

    def angles(self, l1: int, l2: int, l3: int) -> tuple[float, float, float]:
        """Phase angles of the state-set members with indices (l1, l2, l3)."""
        return (
            0.5 * (-TWO_PI + (2 * l1 + 1) * self.dphi),
            0.5 * (-0.5 * math.pi + (2 * l2 + 1) * self.dpsi),
            0.5 * (-math.pi + (2 * l3 + 1) * self.dtheta),
        )

    def state_count(self) -> int:
        return self.K1 * self.K2 * self.K3


def left_matrix(q) -> np.ndarray:
    """4x4 real matrix L with L @ x == q * x for 4-vectors x."""
    a, b, c, d = q
    return np.array([
        [a, -b, -c, -d],
        [b, a, -d, c],
        [c, d, a, -b],
        [d, -c, b, a],
    ], dtype=float)


@dataclass(frozen=True)
class ConditionReport:
    ok: bool
    max_symmetry_deviation: float
    max_diagonal_imag: float
    min_diagonal_real: float
    violations: list[tuple[int, int, str, float]] = field(default_factory=list)

    def lines(self) -> list[str]:
        head = "PASS" if self.ok else "FAIL"
        out = [
            f"{head}: max |w_ij - conj(w_ji)| = {self.max_symmetry_deviation:.4g}, "
            f"max |Ve(w_ii)| = {self.max_diagonal_imag:.4g}, min Re(w_ii) = {self.min_diagonal_real:.4g}"
        ]
        for i, j, kind, dev in self.violations:
            out.append(f"  w[{i + 1}][{j + 1}]: {kind} (deviation {dev:.4g})")
        return out


class WeightMatrix:
    """Quaternionic synaptic weights w[i][j], immutable after construction."""

    def __init__(self, entries):
        w = np.array(entries, dtype=float)
        if w.ndim != 3 or w.shape[0] != w.shape[1] or w.shape[2] != 4:
            raise ValueError(f"weights must have shape (n, n, 4), got {w.shape}")
        w.setflags(write=False)
        self._w = w

    @property
    def n(self) -> int:
        return self._w.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._w

    def __getitem__(self, ij) -> Quaternion:
        i, j = ij
        return Quaternion.from_seq(self._w[i, j])

    @cached_property
    def real_matrix(self) -> np.ndarray:
        n = self.n
        L = np.zeros((4 * n, 4 * n))
        w = self._w
        # Same layout as left_matrix, built blockwise.
        a, b, c, d = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
        rows = [[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]]
        for r in range(4):
            for s in range(4):
                L[r::4, s::4] = rows[r][s]
        L.setflags(write=False)
        return L

    @cached_property
    def conditions(self) -> ConditionReport:
        return validate_weights(self)

    @property
    def diagonal_real(self) -> np.ndarray:
        return self._w[np.arange(self.n), np.arange(self.n), 0]

    def __eq__(self, other):
        return isinstance(other, WeightMatrix) and np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash(self._w.tobytes())

    @classmethod
    def zeros(cls, n: int) -> WeightMatrix:
        return cls(np.zeros((n, n, 4)))


class NetworkState:
    """n unit quaternions, plus integer phase indices for multivalued models."""

    def __init__(self, x, indices=None):
        x = np.array(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != 4:
            raise ValueError(f"state must have shape (n, 4), got {x.shape}")
        norms = np.sqrt((x * x).sum(axis=1))
        if x.shape[0] and np.abs(norms - 1.0).max() > UNIT_TOL:
            raise ValueError("every neuron state must be a unit quaternion")
        x.setflags(write=False)
        self._x = x
        if indices is not None:
            indices = np.array(indices, dtype=np.int64)
            if indices.shape != (x.shape[0], 3):
                raise ValueError("indices must have shape (n, 3)")
            indices.setflags(write=False)
        self._indices = indices

    @classmethod
    def from_indices(cls, indices, K: ResolutionFactors) -> NetworkState:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        for col, k in enumerate(K.as_tuple()):
            if np.any(idx[:, col] < 0) or np.any(idx[:, col] >= k):
                raise ValueError(f"phase index column {col} out of range for K={K.as_tuple()}")
        x = [compose_angles(*K.angles(*row)) for row in idx.tolist()]
        return cls(x, idx)

    @classmethod
    def from_quaternions(cls, qs: Sequence[Quaternion]) -> NetworkState:
        return cls([q.as_tuple() for q in qs])

    @property
    def n(self) -> int:
        return self._x.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._x

    @property
    def indices(self) -> np.ndarray | None:
        return self._indices

    def __getitem__(self, i) -> Quaternion:
        return Quaternion.from_seq(self._x[i])

    def quaternions(self) -> list[Quaternion]:
        return [Quaternion.from_seq(row) for row in self._x]

    def flat(self) -> np.ndarray:
        return self._x.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, NetworkState):
            return NotImplemented
        if self._indices is not None and other._indices is not None:
            if not np.array_equal(self._indices, other._indices):
                return False
        return np.array_equal(self._x, other._x)

    def __hash__(self):
        return hash(self._x.tobytes())

    def with_indices(self, K: ResolutionFactors, tol: float = 1e-9) -> NetworkState:
        """Recover phase indices for a state lying on the K grid, or raise ValueError."""
        if self._indices is not None:
            return self
        rows = []
        for q in self._x.tolist():
            try:
                ang = phase_angles4(*q)
            except NotRepresentable as exc:
                raise ValueError(f"state {q} has no phase-angle representation") from exc
            row = (
                round((2.0 * ang[0] + TWO_PI) / K.dphi - 1) // 2,
                round((2.0 * ang[1] + 0.5 * math.pi) / K.dpsi - 1) // 2,
                round((2.0 * ang[2] + math.pi) / K.dtheta - 1) // 2,
            )
            rows.append(row)
        snapped = NetworkState.from_indices(rows, K)
        if np.abs(snapped.array - self._x).max() > tol:
            raise ValueError(f"state does not lie on the phase grid for K={K.as_tuple()}")
        return snapped

    def __repr__(self):
        return f"NetworkState(n={self.n}, indices={'yes' if self._indices is not None else 'no'})"


def activation_potential(W: WeightMatrix, x: NetworkState, i: int) -> Quaternion:
    """v_i = sum_j w_ij x_j with 0-based neuron index i."""
    if not 0 <= i < W.n:
        raise IndexError(f"neuron index {i} out of range for n={W.n}")
    L = W.real_matrix
    return Quaternion.from_seq(L[4 * i:4 * i + 4] @ x.flat())


def activation_potentials(W: WeightMatrix, x: NetworkState) -> np.ndarray:
    return (W.real_matrix @ x.flat()).reshape(-1, 4)


def quadratic_form(W: WeightMatrix, x: NetworkState) -> Quaternion:
    """The full quaternion x* W x, summed term by term."""
    acc = (0.0, 0.0, 0.0, 0.0)
    xs = [tuple(r) for r in x.array.tolist()]
    w = W.array
    for i in range(W.n):
        xi_bar = (xs[i][0], -xs[i][1], -xs[i][2], -xs[i][3])
        for j in range(W.n):
            t = mul4(xi_bar, mul4(tuple(w[i, j]), xs[j]))
            acc = tuple(a + b for a, b in zip(acc, t))
    return Quaternion(*acc)


def energy(W: WeightMatrix, x: NetworkState) -> float:
    """E(x) = -1/2 Re(x* W x)."""
    if not W.conditions.ok:
        warnings.warn("energy of a weight matrix violating w_ij = conj(w_ji), w_ii >= 0 "
                      "is not guaranteed to be real", RuntimeWarning, stacklevel=2)
    xf = x.flat()
    return -0.5 * float(xf @ (W.real_matrix @ xf))


def validate_weights(W: WeightMatrix, tol: float = 0.0) -> ConditionReport:
    w = W.array
    n = W.n
    wt = np.transpose(w, (1, 0, 2)).copy()
    wt[..., 1:] *= -1.0
    dev = np.abs(w - wt).max(axis=2)
    violations = []
    for i, j in zip(*np.nonzero(dev > tol)):
        if i < j:
            violations.append((int(i), int(j), "w_ij != conj(w_ji)", float(dev[i, j])))
    diag = w[np.arange(n), np.arange(n)]
    diag_imag = np.abs(diag[:, 1:]).max(axis=1) if n else np.zeros(0)
    for i in range(n):
        if diag[i, 0] < -tol:
            violations.append((i, i, "Re(w_ii) < 0", float(-diag[i, 0])))
        if diag_imag[i] > tol:
            violations.append((i, i, "w_ii not real", float(diag_imag[i])))
    violations.sort()
    return ConditionReport(
        ok=not violations,
        max_symmetry_deviation=float(dev.max()) if n else 0.0,
        max_diagonal_imag=float(diag_imag.max()) if n else 0.0,
        min_diagonal_real=float(diag[:, 0].min()) if n else 0.0,
        violations=violations,
    )


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator seeded through SeedSequence; ``seed`` may be an int or a tuple of ints."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def random_hermitian_weights(n: int, seed) -> WeightMatrix:
    """W = U - diag(U) with U = (R + R*)/2 and R standard normal per component.

    Only the strict upper triangle of U is computed; the lower triangle is its
    conjugate mirror, so symmetry is exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    R = make_rng(seed).standard_normal((n, n, 4))
    Rt = np.transpose(R, (1, 0, 2)).copy()
    Rt[..., 1:] *= -1.0
    U = 0.5 * (R + Rt)
    W = np.zeros_like(U)
    iu, ju = np.triu_indices(n, k=1)
    W[iu, ju] = U[iu, ju]
    W[ju, iu, 0] = U[iu, ju, 0]
    W[ju, iu, 1:] = -U[iu, ju, 1:]
    return WeightMatrix(W)


def random_indices(n: int, K: ResolutionFactors, seed) -> np.ndarray:
    rng = make_rng(seed)
    return np.stack([rng.integers(0, k, size=n) for k in K.as_tuple()], axis=1)


def random_state(n: int, K: ResolutionFactors, seed) -> NetworkState:
    return NetworkState.from_indices(random_indices(n, K, seed), K)


# Built-in two-neuron instance shared by the worked examples.
EXAMPLE_K = ResolutionFactors(2, 2, 2)
EXAMPLE_W12 = (5.0, 1.0, 7.0, 2.0)


def example_weights() -> WeightMatrix:
    w12 = EXAMPLE_W12
    w21 = (w12[0], -w12[1], -w12[2], -w12[3])
    return WeightMatrix([[(0.0, 0.0, 0.0, 0.0), w12], [w21, (0.0, 0.0, 0.0, 0.0)]])


def example_state() -> NetworkState:
    # (phi, psi, theta) = (-pi/2, -pi/8, -pi/4) for both neurons: index 0 everywhere when K = 2.
    return NetworkState.from_indices([[0, 0, 0], [0, 0, 0]], EXAMPLE_K)


def instance_to_dict(W: WeightMatrix, x: NetworkState | None = None,
                     K: ResolutionFactors | None = None) -> dict:
    doc = {"n": W.n, "weights": W.array.tolist()}
    if x is not None:
        doc["state"] = x.array.tolist()
        if x.indices is not None:
            doc["indices"] = x.indices.tolist()
    if K is not None:
        doc["K"] = list(K.as_tuple())
    return doc


def instance_from_dict(doc: dict) -> tuple[WeightMatrix, NetworkState | None, ResolutionFactors | None]:
    W = WeightMatrix(doc["weights"])
    if int(doc.get("n", W.n)) != W.n:
        raise ValueError(f"declared n={doc['n']} does not match weights of size {W.n}")
    K = ResolutionFactors(*doc["K"]) if doc.get("K") else None
    x = None
    if doc.get("indices") is not None and K is not None:
        x = NetworkState.from_indices(doc["indices"], K)
    elif doc.get("state") is not None:
        x = NetworkState(doc["state"], doc.get("indices"))
    if x is not None and x.n != W.n:
        raise ValueError("state length does not match weights")
    return W, x, K


def save_instance(path, W: WeightMatrix, x: NetworkState | None = None,
                  K: ResolutionFactors | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(W, x, K)))


def load_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text()))
