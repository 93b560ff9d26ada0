"""Update rules, scheduling and trajectory verdicts for the three QHNN models.

Time is kept as an exact fraction: event counter over events per time unit.
A time unit is one phi-, one psi- and one theta-sweep for the single-angle
multivalued model and a single sweep for the other two.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .network import NetworkState, ResolutionFactors, WeightMatrix
from .quaternion import (
    HALF_PI,
    QUARTER_PI,
    NotRepresentable,
    PhaseTriple,
    Quaternion,
    compose_angles,
    phase_angles4,
)

PI = math.pi


class ModelKind(str, Enum):
    MV_QHNN = "mv"
    MV_QHNN3 = "mv3"
    CV_QHNN = "cv"

    @property
    def multivalued(self) -> bool:
        return self is not ModelKind.CV_QHNN

    @property
    def label(self) -> str:
        return {"mv": "MV-QHNN", "mv3": "MV-QHNN3", "cv": "CV-QHNN"}[self.value]


class UpdateMode(str, Enum):
    ASYNCHRONOUS = "async"
    PARALLEL = "parallel"


PHI, PSI, THETA = 0, 1, 2
SELECTORS = {"phi": PHI, "psi": PSI, "theta": THETA}


@dataclass(frozen=True)
class Tolerances:
    # max per-component difference under which two CV states count as equal
    state: float = 1e-9
    # |v_i| at or below this is treated as the zero potential in the CV rule
    zero: float = 1e-12
    # a CV move counts as a change only if it lowers E by more than energy * (1 + |E|)
    energy: float = 1e-12


DEFAULT_TOL = Tolerances()


class QuantizeAudit:
    """Counts quantize calls and violations of the half-quantum bound."""

    # |angle_M - angle| may equal half a quantum exactly when the angle sits on an arc edge.
    slack = 1e-12

    def __init__(self):
        self.calls = 0
        self.violations = 0
        self.worst = 0.0

    def reset(self):
        self.calls = 0
        self.violations = 0
        self.worst = 0.0


QUANTIZE_AUDIT = QuantizeAudit()


def _arc_index(angle: float, lower: float, quantum: float, k: int) -> int:
    l = math.floor((angle - lower) / quantum)
    if l < 0:
        return 0
    if l >= k:
        return k - 1
    return l


def quantize_indices(alpha: float, beta: float, gamma: float, K: ResolutionFactors) -> tuple[int, int, int]:
    """Indices of the arc midpoints nearest to (alpha, beta, gamma), with the bound check."""
    dphi, dpsi, dtheta = K.dphi, K.dpsi, K.dtheta
    l1 = _arc_index(alpha, -PI, dphi, K.K1)
    l2 = _arc_index(beta, -QUARTER_PI, dpsi, K.K2)
    l3 = _arc_index(gamma, -HALF_PI, dtheta, K.K3)
    phi_m, psi_m, theta_m = K.angles(l1, l2, l3)
    audit = QUANTIZE_AUDIT
    audit.calls += 1
    excess = max(
        abs(phi_m - alpha) - 0.5 * dphi,
        abs(psi_m - beta) - 0.5 * dpsi,
        abs(theta_m - gamma) - 0.5 * dtheta,
    )
    if excess > audit.worst:
        audit.worst = excess
    if excess > audit.slack:
        audit.violations += 1
        raise AssertionError(
            f"quantized angles {(phi_m, psi_m, theta_m)} exceed half a quantum from "
            f"{(alpha, beta, gamma)} for K={K.as_tuple()}"
        )
    return l1, l2, l3


def quantize(vp: PhaseTriple, K: ResolutionFactors) -> PhaseTriple:
    return PhaseTriple(*K.angles(*quantize_indices(vp[0], vp[1], vp[2], K)))


class NeuronUpdate(NamedTuple):
    q: Quaternion
    indices: tuple[int, int, int] | None
    changed: bool


# Scalar rules shared by the public step functions and the trajectory engine.

def _mv_target(v, cur: tuple[int, int, int], K: ResolutionFactors, selector: int | None):
    """New index triple for a multivalued neuron; None for the outside-A no-op."""
    try:
        angles = phase_angles4(v[0], v[1], v[2], v[3])
    except NotRepresentable:
        return None
    target = quantize_indices(angles[0], angles[1], angles[2], K)
    if selector is None:
        return target
    new = list(cur)
    new[selector] = target[selector]
    return tuple(new)


def _cv_target(v, cur, w_ii: float, E: float, tol: Tolerances):
    """Normalized potential, or None when v is zero or the move is below tolerance.

    For a single-neuron move the energy drops by exactly (|v| + w_ii) |dx|^2 / 2,
    which is evaluated here without the cancellation of differencing E.
    """
    nv = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3])
    if nv <= tol.zero:
        return None
    new = (v[0] / nv, v[1] / nv, v[2] / nv, v[3] / nv)
    diff = [a - b for a, b in zip(new, cur)]
    if max(abs(d) for d in diff) <= tol.state:
        return None
    drop = 0.5 * (nv + w_ii) * sum(d * d for d in diff)
    if drop <= tol.energy * (1.0 + abs(E)):
        return None
    return new


def _require_indices(x: NetworkState, K: ResolutionFactors | None) -> NetworkState:
    if K is None:
        raise ValueError("multivalued models require resolution factors K")
    return x.with_indices(K)


def _selector(sel) -> int:
    if isinstance(sel, str):
        return SELECTORS[sel]
    if sel not in (PHI, PSI, THETA):
        raise ValueError(f"unknown angle selector {sel!r}")
    return sel


def _potential(W: WeightMatrix, x: NetworkState, i: int):
    if not 0 <= i < W.n:
        raise IndexError(f"neuron index {i} out of range for n={W.n}")
    return (W.real_matrix[4 * i:4 * i + 4] @ x.flat()).tolist()


def step_mvqhnn(W: WeightMatrix, x: NetworkState, i: int, K: ResolutionFactors,
                angle_selector="phi") -> NeuronUpdate:
    """Replace one phase angle of neuron ``i`` (0-based) by the quantized angle of its potential."""
    x = _require_indices(x, K)
    cur = tuple(int(c) for c in x.indices[i])
    new = _mv_target(_potential(W, x, i), cur, K, _selector(angle_selector))
    if new is None or new == cur:
        return NeuronUpdate(x[i], cur, False)
    return NeuronUpdate(Quaternion(*compose_angles(*K.angles(*new))), new, True)


def step_mvqhnn3(W: WeightMatrix, x: NetworkState, i: int, K: ResolutionFactors) -> NeuronUpdate:
    """Replace all three phase angles of neuron ``i`` at once."""
    x = _require_indices(x, K)
    cur = tuple(int(c) for c in x.indices[i])
    new = _mv_target(_potential(W, x, i), cur, K, None)
    if new is None or new == cur:
        return NeuronUpdate(x[i], cur, False)
    return NeuronUpdate(Quaternion(*compose_angles(*K.angles(*new))), new, True)


def step_cvqhnn(W: WeightMatrix, x: NetworkState, i: int, tol: Tolerances = DEFAULT_TOL) -> NeuronUpdate:
    """Set neuron ``i`` to its normalized activation potential."""
    cur = tuple(x.array[i].tolist())
    xf = x.flat()
    E = -0.5 * float(xf @ (W.real_matrix @ xf))
    new = _cv_target(_potential(W, x, i), cur, float(W.array[i, i, 0]), E, tol)
    if new is None:
        return NeuronUpdate(x[i], None, False)
    return NeuronUpdate(Quaternion(*new), None, True)


@dataclass(frozen=True)
class TraceRow:
    t: Fraction
    energy: float
    # 0 for the initial state, 1..n for an asynchronous neuron, -1 for a parallel sweep
    neuron: int
    changed: int


@dataclass
class TrajectoryOutcome:
    model: ModelKind
    mode: UpdateMode
    verdict: str  # "converged" | "periodic" | "exhausted"
    t: Fraction  # convergence time, first time of the cycle, or t_max
    period: Fraction | None
    trace: list[TraceRow]
    final_state: NetworkState
    states: list[NetworkState] | None = None

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    @property
    def periodic(self) -> bool:
        return self.verdict == "periodic"

    @property
    def energy_trace(self) -> list[tuple[Fraction, float]]:
        return [(r.t, r.energy) for r in self.trace]

    @property
    def final_energy(self) -> float:
        return self.trace[-1].energy

    def energy_at(self, t) -> float:
        t = Fraction(t)
        for r in self.trace:
            if r.t == t:
                return r.energy
        raise KeyError(f"no event at t={t}")

    def verdict_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "t": float(self.t),
            "t_exact": str(self.t),
            "period": None if self.period is None else float(self.period),
            "period_exact": None if self.period is None else str(self.period),
            "final_energy": self.final_energy,
            "model": self.model.value,
            "mode": self.mode.value,
        }

    def verdict_json(self) -> str:
        return json.dumps(self.verdict_dict(), indent=2) + "\n"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_num", "t_den", "energy", "neuron", "changed"])
        for r in self.trace:
            w.writerow([r.t.numerator, r.t.denominator, repr(r.energy), r.neuron, r.changed])
        return buf.getvalue()


TransitionHook = Callable[[int, NetworkState, NetworkState], None]


class _Engine:
    """Mutable working copy of one trajectory."""

    def __init__(self, model: ModelKind, mode: UpdateMode, W: WeightMatrix, x0: NetworkState,
                 K: ResolutionFactors | None, tol: Tolerances):
        self.model = model
        self.mode = mode
        self.W = W
        self.K = K
        self.tol = tol
        self.n = W.n
        if x0.n != W.n:
            raise ValueError(f"state has {x0.n} neurons, weights have {W.n}")
        if model.multivalued:
            x0 = _require_indices(x0, K)
            self.idx = [tuple(int(c) for c in row) for row in x0.indices.tolist()]
        else:
            self.idx = None
        self.L = W.real_matrix
        self.blocks = [np.ascontiguousarray(self.L[4 * i:4 * i + 4]) for i in range(self.n)]
        self.wdiag = W.diagonal_real.tolist()
        self.x = np.array(x0.array, dtype=float)
        self.xf = self.x.reshape(-1)
        self.sweeps = [PHI, PSI, THETA] if model is ModelKind.MV_QHNN else [None]
        per_sweep = self.n if mode is UpdateMode.ASYNCHRONOUS else 1
        self.events_per_unit = len(self.sweeps) * per_sweep

    def energy(self) -> float:
        return -0.5 * float(self.xf @ (self.L @ self.xf))

    def snapshot(self) -> NetworkState:
        if self.idx is not None:
            return NetworkState(self.x.copy(), self.idx)
        return NetworkState(self.x.copy())

    def key(self):
        if self.idx is not None:
            return tuple(self.idx)
        return np.round(self.x / self.tol.state).astype(np.int64).tobytes()

    def target(self, v, i: int, selector, E: float):
        if self.idx is not None:
            cur = self.idx[i]
            new = _mv_target(v, cur, self.K, selector)
            if new is None or new == cur:
                return None
            return new, compose_angles(*self.K.angles(*new))
        new = _cv_target(v, self.x[i].tolist(), self.wdiag[i], E, self.tol)
        if new is None:
            return None
        return None, new

    def apply(self, i: int, upd):
        idx, q = upd
        if idx is not None:
            self.idx[i] = idx
        self.x[i] = q

    def sweep(self, selector, emit, hook: TransitionHook | None, energy: Callable[[], float]) -> int:
        """One pass over all neurons for the given selector; returns the number of changes."""
        changes = 0
        if self.mode is UpdateMode.ASYNCHRONOUS:
            for i in range(self.n):
                v = (self.blocks[i] @ self.xf).tolist()
                upd = self.target(v, i, selector, energy())
                if upd is not None:
                    before = self.snapshot() if hook else None
                    self.apply(i, upd)
                    changes += 1
                    if hook:
                        hook(i, before, self.snapshot())
                elif hook:
                    s = self.snapshot()
                    hook(i, s, s)
                emit(i + 1, 1 if upd is not None else 0)
        else:
            V = (self.L @ self.xf).reshape(self.n, 4).tolist()
            E = energy()
            updates = [(i, self.target(V[i], i, selector, E)) for i in range(self.n)]
            for i, upd in updates:
                if upd is not None:
                    self.apply(i, upd)
                    changes += 1
            emit(-1, changes)
        return changes


def _check_config(model: ModelKind, K: ResolutionFactors | None, t_max: int):
    if model.multivalued and K is None:
        raise ValueError(f"{model.label} requires resolution factors K")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")


def run(model, mode, W: WeightMatrix, x0: NetworkState, K: ResolutionFactors | None = None,
        t_max: int = 1000, tol: Tolerances = DEFAULT_TOL, record_states: bool = False,
        on_transition: TransitionHook | None = None) -> TrajectoryOutcome:
    """Evolve ``x0`` until a stationary unit, a revisited state, or ``t > t_max``.

    Revisits are checked at time-unit boundaries: exact index equality for the
    multivalued models, per-component tolerance for the continuous one.
    ``on_transition(i, before, after)`` is called for every asynchronous neuron
    update, including no-ops.
    """
    model = ModelKind(model)
    mode = UpdateMode(mode)
    _check_config(model, K, t_max)
    eng = _Engine(model, mode, W, x0, K, tol)
    epu = eng.events_per_unit

    energy = eng.energy()
    trace = [TraceRow(Fraction(0), energy, 0, 0)]
    states = [eng.snapshot()] if record_states else None
    counter = 0
    last_change = 0

    def emit(neuron, changed):
        nonlocal counter, energy, last_change
        counter += 1
        if changed:
            energy = eng.energy()
            last_change = counter
        trace.append(TraceRow(Fraction(counter, epu), energy, neuron, changed))
        if states is not None:
            states.append(eng.snapshot())

    seen = {eng.key(): 0}
    seen_states = {0: eng.x.copy()}
    for unit in range(1, t_max + 1):
        changes = 0
        for selector in eng.sweeps:
            changes += eng.sweep(selector, emit, on_transition, lambda: energy)
        if changes == 0:
            return TrajectoryOutcome(model, mode, "converged", Fraction(last_change, epu), None,
                                     trace, eng.snapshot(), states)
        key = eng.key()
        prev = seen.get(key)
        if prev is not None and (eng.idx is not None
                                 or np.abs(seen_states[prev] - eng.x).max() <= tol.state):
            return TrajectoryOutcome(model, mode, "periodic", Fraction(prev), Fraction(unit - prev),
                                     trace, eng.snapshot(), states)
        seen[key] = unit
        if eng.idx is None:
            seen_states[unit] = eng.x.copy()
    return TrajectoryOutcome(model, mode, "exhausted", Fraction(t_max), None, trace,
                             eng.snapshot(), states)


def _unit_step(model: ModelKind, mode: UpdateMode, W: WeightMatrix, x: NetworkState,
               K: ResolutionFactors) -> NetworkState:
    """One full time unit built from the public step functions."""
    sweeps = ["phi", "psi", "theta"] if model is ModelKind.MV_QHNN else [None]
    for sel in sweeps:
        updates = []
        for i in range(W.n):
            if model is ModelKind.MV_QHNN:
                u = step_mvqhnn(W, x, i, K, sel)
            else:
                u = step_mvqhnn3(W, x, i, K)
            if mode is UpdateMode.ASYNCHRONOUS:
                if u.changed:
                    idx = np.array(x.indices)
                    idx[i] = u.indices
                    x = NetworkState.from_indices(idx, K)
            else:
                updates.append((i, u))
        if updates:
            idx = np.array(x.indices)
            for i, u in updates:
                idx[i] = u.indices
            x = NetworkState.from_indices(idx, K)
    return x


def enumerate_fixed_points(model, W: WeightMatrix, K: ResolutionFactors,
                           mode=UpdateMode.ASYNCHRONOUS, budget: int = 10**6) -> set[tuple]:
    """Every index vector left invariant by one full time unit.

    States are returned as tuples of per-neuron index triples.
    """
    model = ModelKind(model)
    mode = UpdateMode(mode)
    if not model.multivalued:
        raise ValueError("fixed-point enumeration needs a multivalued model")
    total = K.state_count() ** W.n
    if total > budget:
        raise BudgetExceeded(f"{total} states exceed the enumeration budget of {budget}")
    singles = list(itertools.product(range(K.K1), range(K.K2), range(K.K3)))
    fixed = set()
    for combo in itertools.product(singles, repeat=W.n):
        x = NetworkState.from_indices(combo, K)
        if _unit_step(model, mode, W, x, K) == x:
            fixed.add(tuple(combo))
    return fixed


class BudgetExceeded(RuntimeError):
    pass


def all_index_states(n: int, K: ResolutionFactors):
    singles = list(itertools.product(range(K.K1), range(K.K2), range(K.K3)))
    return list(itertools.product(singles, repeat=n))


def state_key(x: NetworkState) -> tuple:
    return tuple(tuple(int(c) for c in row) for row in x.indices.tolist())
