"""Reproductions of the worked two-neuron examples and the random-network convergence study."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diagnostics import decompose
from .dynamics import (
    QUANTIZE_AUDIT,
    BudgetExceeded,
    ModelKind,
    TrajectoryOutcome,
    UpdateMode,
    quantize,
    run,
)
from .network import (
    EXAMPLE_K,
    NetworkState,
    ResolutionFactors,
    WeightMatrix,
    activation_potential,
    energy,
    example_state,
    example_weights,
    random_hermitian_weights,
    random_state,
)
from .quaternion import compose_angles, to_phase_angles

PI = math.pi


@dataclass
class Check:
    name: str
    expected: object
    actual: object
    tol: float | None
    passed: bool

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        tol = "exact" if self.tol in (None, 0) else f"±{self.tol:g}"
        return f"{mark:4}  {self.name:<38} expected {_fmt(self.expected):<34} got {_fmt(self.actual):<34} ({tol})"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _jsonable(v):
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass
class ReproReport:
    example: int
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def close(self, name, expected, actual, tol):
        if isinstance(expected, (tuple, list)):
            ok = len(expected) == len(actual) and all(abs(a - e) <= tol for a, e in zip(actual, expected))
        else:
            ok = abs(actual - expected) <= tol
        self.checks.append(Check(name, expected, actual, tol, bool(ok)))

    def equal(self, name, expected, actual):
        self.checks.append(Check(name, expected, actual, None, expected == actual))

    def table(self) -> str:
        lines = [f"Example {self.example}: {'all checks pass' if self.passed else 'FAILED'} "
                 f"({sum(c.passed for c in self.checks)}/{len(self.checks)}, {self.seconds:.3f} s)"]
        lines += [c.row() for c in self.checks]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "example": self.example,
            "passed": self.passed,
            "seconds": self.seconds,
            "checks": [
                {"name": c.name, "expected": _jsonable(c.expected), "actual": _jsonable(c.actual),
                 "tol": c.tol, "passed": c.passed}
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _q(phi, psi, theta):
    return compose_angles(phi, psi, theta)


def _example1(rep: ReproReport, t_max: int):
    W, x0, K = example_weights(), example_state(), EXAMPLE_K
    rep.close("E(x(0))", -5.0, energy(W, x0), 1e-9)
    v = activation_potential(W, x0, 0)
    rep.close("v1(0)", (-0.1121, 1.577, -5.207, 7.028), v.as_tuple(), 5e-4)
    angles = to_phase_angles(v)
    rep.close("phase angles of v1(0)", (2.1939, 0.09455, 1.4181), tuple(angles), 5e-4)
    rep.equal("quantized angles", K.angles(1, 1, 1), tuple(quantize(angles, K)))
    rep.close("quantized angles = (pi/2, pi/8, pi/4)", (PI / 2, PI / 8, PI / 4), tuple(quantize(angles, K)), 1e-15)

    out = run(ModelKind.MV_QHNN, UpdateMode.ASYNCHRONOUS, W, x0, K, t_max=t_max, record_states=True)
    x16 = out.states[1]
    rep.close("x1(1/6)", _q(PI / 2, -PI / 8, -PI / 4), tuple(x16.array[0]), 1e-12)
    rep.close("E(x(1/6))", 5.0, out.energy_at(Fraction(1, 6)), 1e-9)
    rep.close("E(x(1/3))", -5.0, out.energy_at(Fraction(1, 3)), 1e-9)
    d = decompose(W, x0, x16, 0, K)
    rep.equal("integer steps (a, b, c)", (1, 0, 0), (d.a, d.b, d.c))
    rep.close("shifts (dphi, dpsi, dtheta)", (0.6231, 0.4873, 2.2035),
              (d.dphi_shift, d.dpsi_shift, d.dtheta_shift), 5e-4)
    rep.equal("H1 holds", False, d.H1_holds)
    rep.equal("H2 holds", False, d.H2_holds)
    rep.close("dE from t=0 to t=1/6", 10.0, d.deltaE_direct, 1e-9)
    rep.close("dE via X1, X2, X3 identity", 10.0, d.deltaE, 1e-9)
    rep.equal("async MV-QHNN verdict", "periodic", out.verdict)
    par = run(ModelKind.MV_QHNN, UpdateMode.PARALLEL, W, x0, K, t_max=t_max)
    rep.equal("parallel MV-QHNN verdict", "periodic", par.verdict)


def _example2(rep: ReproReport, t_max: int):
    W, x0, K = example_weights(), example_state(), EXAMPLE_K
    out = run(ModelKind.MV_QHNN3, UpdateMode.ASYNCHRONOUS, W, x0, K, t_max=t_max, record_states=True)
    rep.close("x1(1/2)", _q(PI / 2, PI / 8, PI / 4), tuple(out.states[1].array[0]), 1e-12)
    rep.close("E(x(1/2))", -7.0, out.energy_at(Fraction(1, 2)), 1e-9)
    rep.equal("async MV-QHNN3 verdict", "periodic", out.verdict)
    par = run(ModelKind.MV_QHNN3, UpdateMode.PARALLEL, W, x0, K, t_max=t_max)
    rep.equal("parallel MV-QHNN3 verdict", "periodic", par.verdict)


def _example3(rep: ReproReport, t_max: int):
    W, x0 = example_weights(), example_state()
    out = run(ModelKind.CV_QHNN, UpdateMode.ASYNCHRONOUS, W, x0, t_max=t_max, record_states=True)
    rep.equal("async CV-QHNN verdict", "converged", out.verdict)
    rep.equal("async CV-QHNN convergence time", Fraction(1, 2), out.t)
    x_half = out.states[1].array
    rep.close("x1(1/2)", (-0.01261, 0.1774, -0.5858, 0.7907), tuple(x_half[0]), 5e-4)
    rep.close("x2(1/2)", (-0.2706, -0.6533, -0.2706, 0.6533), tuple(x_half[1]), 5e-4)
    rep.close("E(x(1/2))", -8.888, out.energy_at(Fraction(1, 2)), 1e-3)
    rep.close("dE from t=0 to t=1/2", -3.888, out.energy_at(Fraction(1, 2)) - out.energy_at(0), 1e-3)

    par = run(ModelKind.CV_QHNN, UpdateMode.PARALLEL, W, x0, t_max=t_max, record_states=True)
    rep.equal("parallel CV-QHNN verdict", "periodic", par.verdict)
    rep.equal("parallel CV-QHNN period", Fraction(2), par.period)
    rep.close("x1(1)", (-0.01261, 0.1774, -0.5858, 0.7907), tuple(par.states[1].array[0]), 5e-4)
    rep.close("x2(1)", (-0.2918, -0.9124, 0.2814, -0.05567), tuple(par.states[1].array[1]), 5e-4)
    gap = float(np.abs(par.states[2].array - x0.array).max())
    rep.close("max |x(2) - x(0)|", 0.0, gap, 1e-9)
    worst = max(abs(e + 5.0) for _, e in par.energy_trace)
    rep.close("max |E(x(t)) + 5| (parallel)", 0.0, worst, 1e-9)


def reproduce_example(example_id: int, t_max: int = 100) -> ReproReport:
    runners = {1: _example1, 2: _example2, 3: _example3}
    if example_id not in runners:
        raise ValueError(f"unknown example {example_id!r}; choose 1, 2 or 3")
    rep = ReproReport(example_id)
    start = time.perf_counter()
    runners[example_id](rep, t_max)
    rep.seconds = time.perf_counter() - start
    return rep


# Random-network convergence study

ALL_RUNS = tuple((m, u) for m in ModelKind for u in UpdateMode)


@dataclass
class SweepConfig:
    n: int = 20
    trials: int = 30
    t_max: int = 200
    resolutions: list[tuple[int, int, int]] = field(
        default_factory=lambda: [(2 ** m,) * 3 for m in (1, 2, 4, 8, 17)])
    runs: tuple[tuple[ModelKind, UpdateMode], ...] = ALL_RUNS
    seed: int = 2018
    workers: int = 1
    # wall-clock cap per trial in seconds; None disables it
    trial_seconds: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 1 or self.t_max < 1:
            raise ValueError("n and t_max must be >= 1")
        self.runs = tuple((ModelKind(m), UpdateMode(u)) for m, u in self.runs)
        self.resolutions = [tuple(int(k) for k in K) for K in self.resolutions]

    @classmethod
    def full(cls, **kw) -> SweepConfig:
        kw.setdefault("n", 100)
        kw.setdefault("trials", 100)
        kw.setdefault("t_max", 1000)
        kw.setdefault("resolutions", [(2 ** m,) * 3 for m in range(1, 21)])
        return cls(**kw)


def trial_seeds(master: int, trial: int, K: tuple[int, int, int]):
    """Seeds for the weights and the initial state of one trial.

    Both go through numpy's SeedSequence, which hashes the integer tuple into
    the generator state; the weights ignore K so every resolution shares them.
    """
    return (master, trial, 0), (master, trial, 1, *K)


@dataclass
class TrialRecord:
    trial: int
    verdicts: dict  # (model, mode, K) -> (verdict, t)
    cv_async_monotone: bool
    quantize_calls: int
    quantize_violations: int


def _monotone(out: TrajectoryOutcome) -> bool:
    tr = out.trace
    return all(b.energy <= a.energy for a, b in zip(tr, tr[1:]))


def run_trial(cfg: SweepConfig, trial: int) -> TrialRecord:
    start = time.perf_counter()
    calls0, viol0 = QUANTIZE_AUDIT.calls, QUANTIZE_AUDIT.violations
    w_seed, _ = trial_seeds(cfg.seed, trial, (0, 0, 0))
    W = random_hermitian_weights(cfg.n, w_seed)
    verdicts = {}
    monotone = True
    for Kt in cfg.resolutions:
        K = ResolutionFactors(*Kt)
        x0 = random_state(cfg.n, K, trial_seeds(cfg.seed, trial, Kt)[1])
        for model, mode in cfg.runs:
            out = run(model, mode, W, x0, K, t_max=cfg.t_max)
            verdicts[(model.value, mode.value, Kt)] = (out.verdict, out.t)
            if model is ModelKind.CV_QHNN and mode is UpdateMode.ASYNCHRONOUS:
                monotone = monotone and _monotone(out)
            if cfg.trial_seconds is not None and time.perf_counter() - start > cfg.trial_seconds:
                raise BudgetExceeded(f"trial {trial} exceeded {cfg.trial_seconds} s")
    return TrialRecord(trial, verdicts, monotone, QUANTIZE_AUDIT.calls - calls0,
                       QUANTIZE_AUDIT.violations - viol0)


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class SweepCell:
    model: str
    mode: str
    K: tuple[int, int, int]
    trials: int
    converged: int
    mean_t_conv: float | None

    @property
    def probability(self) -> float:
        return self.converged / self.trials


@dataclass
class SweepResult:
    config: SweepConfig
    cells: dict  # (model, mode, K) -> SweepCell
    records: list[TrialRecord]

    def probability(self, model, mode, K) -> float:
        return self.cells[(ModelKind(model).value, UpdateMode(mode).value, tuple(K))].probability

    def verdict(self, trial: int, model, mode, K) -> str:
        return self.records[trial].verdicts[(ModelKind(model).value, UpdateMode(mode).value, tuple(K))][0]

    @property
    def quantize_calls(self) -> int:
        return sum(r.quantize_calls for r in self.records)

    @property
    def quantize_violations(self) -> int:
        return sum(r.quantize_violations for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "mode", "K1", "K2", "K3", "trials", "converged", "probability", "mean_t_conv"])
        for key in sorted(self.cells, key=lambda k: (k[0], k[1], k[2])):
            c = self.cells[key]
            w.writerow([c.model, c.mode, *c.K, c.trials, c.converged, repr(c.probability),
                        "" if c.mean_t_conv is None else repr(c.mean_t_conv)])
        return buf.getvalue()


def convergence_sweep(cfg: SweepConfig) -> SweepResult:
    """Run every configured model on shared random instances and tally convergence."""
    args = [(cfg, t) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_trial_args, args))
    else:
        records = [run_trial(*a) for a in args]
    records.sort(key=lambda r: r.trial)
    cells = {}
    for Kt in cfg.resolutions:
        for model, mode in cfg.runs:
            key = (model.value, mode.value, Kt)
            times = [float(r.verdicts[key][1]) for r in records if r.verdicts[key][0] == "converged"]
            cells[key] = SweepCell(model.value, mode.value, Kt, cfg.trials, len(times),
                                   sum(times) / len(times) if times else None)
    return SweepResult(cfg, cells, records)


# Large-resolution limit

@dataclass
class ComparisonReport:
    verdict_a: str
    verdict_b: str
    discrepancies: list[float]
    step_bound: float | None = None

    @property
    def verdicts_agree(self) -> bool:
        return self.verdict_a == self.verdict_b

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancies) if self.discrepancies else 0.0


def compare_trajectories(a: TrajectoryOutcome, b: TrajectoryOutcome) -> ComparisonReport:
    """Per-event max component difference, holding the shorter run at its final state."""
    if a.states is None or b.states is None:
        raise ValueError("both trajectories must be run with record_states=True")
    n = max(len(a.states), len(b.states))
    disc = []
    for k in range(n):
        sa = a.states[min(k, len(a.states) - 1)].array
        sb = b.states[min(k, len(b.states) - 1)].array
        disc.append(float(np.abs(sa - sb).max()))
    return ComparisonReport(a.verdict, b.verdict, disc)


def large_k_equivalence(W: WeightMatrix, x0: NetworkState, K_big: ResolutionFactors,
                        t_max: int = 200) -> ComparisonReport:
    """Compare asynchronous MV-QHNN3 at resolution ``K_big`` with asynchronous CV-QHNN."""
    if min(K_big.as_tuple()) < 2:
        raise ValueError("K_big components must be >= 2")
    mv3 = run(ModelKind.MV_QHNN3, UpdateMode.ASYNCHRONOUS, W, x0, K_big, t_max=t_max, record_states=True)
    cv = run(ModelKind.CV_QHNN, UpdateMode.ASYNCHRONOUS, W, x0, t_max=t_max, record_states=True)
    rep = compare_trajectories(mv3, cv)
    rep.step_bound = 2.0 * (K_big.dphi + K_big.dpsi + K_big.dtheta)
    return rep
