"""Acceptance criteria C1-C8, each at its stated tolerance.

A one-line PASS/FAIL per criterion is printed in the terminal summary (see conftest.py).
"""

import time

import numpy as np
import pytest

from qhnn.diagnostics import decompose
from qhnn.dynamics import QUANTIZE_AUDIT, all_index_states, enumerate_fixed_points, run, state_key
from qhnn.experiments import SweepConfig, convergence_sweep, reproduce_example
from qhnn.network import (
    EXAMPLE_K,
    NetworkState,
    ResolutionFactors,
    WeightMatrix,
    example_weights,
    random_hermitian_weights,
    random_state,
    validate_weights,
)
from qhnn.quaternion import PhaseTriple, from_phase_angles, is_in_A, to_phase_angles


def _example(criterion, cid, example_id):
    start = time.perf_counter()
    rep = reproduce_example(example_id)
    elapsed = time.perf_counter() - start
    for c in rep.checks:
        criterion(cid, c.name, c.passed, f"got {c.actual!r}")
    criterion(cid, "runtime < 1 s", elapsed < 1.0, f"{elapsed:.3f} s")
    assert rep.passed, rep.table()
    assert elapsed < 1.0


def test_c1_example1(criterion):
    _example(criterion, "C1", 1)


def test_c2_example2(criterion):
    _example(criterion, "C2", 2)


def test_c3_example3(criterion):
    _example(criterion, "C3", 3)


def _fixed_point_agreement(W, K):
    """Mismatches between run() verdicts and enumerated fixed points over every initial state."""
    bad = []
    for model in ("mv", "mv3"):
        for mode in ("async", "parallel"):
            fixed = enumerate_fixed_points(model, W, K, mode)
            for idx in all_index_states(W.n, K):
                out = run(model, mode, W, NetworkState.from_indices(idx, K), K, t_max=200)
                if (out.converged and out.t == 0) != (idx in fixed):
                    bad.append((model, mode, idx))
                if out.converged and state_key(out.final_state) not in fixed:
                    bad.append((model, mode, idx, "final"))
    return bad


def test_c4_fixed_point_oracle(criterion):
    start = time.perf_counter()
    bad = _fixed_point_agreement(example_weights(), EXAMPLE_K)
    criterion("C4", "example instance, 64 states x 2 models x 2 modes", not bad, f"{len(bad)} mismatches")
    extra = []
    for seed in range(6):
        extra += _fixed_point_agreement(random_hermitian_weights(2, seed), EXAMPLE_K)
    criterion("C4", "random two-neuron instances", not extra, f"{len(extra)} mismatches")
    elapsed = time.perf_counter() - start
    criterion("C4", "runtime < 10 s", elapsed < 10.0, f"{elapsed:.2f} s")
    assert not bad and not extra
    assert elapsed < 10.0


def _instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    W = random_hermitian_weights(n, (seed, 0))
    if seed % 3 == 0:
        w = W.array.copy()
        w[np.arange(n), np.arange(n), 0] = rng.uniform(0.0, 3.0, n)
        W = WeightMatrix(w)
    if seed % 2 == 0:
        x = rng.standard_normal((n, 4))
        x0 = NetworkState(x / np.linalg.norm(x, axis=1, keepdims=True))
    else:
        x0 = random_state(n, ResolutionFactors(8, 8, 8), (seed, 1))
    return W, x0


def test_c5_monotonicity(criterion):
    start = time.perf_counter()
    violations = invalid = events = 0
    for seed in range(100):
        W, x0 = _instance(seed)
        invalid += not validate_weights(W).ok
        out = run("cv", "async", W, x0, t_max=200)
        for a, b in zip(out.trace, out.trace[1:]):
            events += 1
            if b.energy > a.energy:
                violations += 1
            elif b.changed and not a.energy - b.energy > 1e-12 * (1 + abs(a.energy)):
                violations += 1
    elapsed = time.perf_counter() - start
    criterion("C5", "weights pass validation", invalid == 0, f"{invalid} invalid")
    criterion("C5", "no monotonicity violations", violations == 0, f"{violations} of {events} events")
    criterion("C5", "runtime < 30 s", elapsed < 30.0, f"{elapsed:.2f} s")
    assert invalid == 0 and violations == 0
    assert elapsed < 30.0


def test_c6_energy_identity(criterion):
    start = time.perf_counter()
    count = identity_bad = closed_bad = closed_checked = 0
    seed = 0
    while count < 10_000:
        for model in ("mv", "mv3", "cv"):
            n = 4 + seed % 5
            K = ResolutionFactors(*(2 ** (1 + (seed + j) % 5) for j in range(3)))
            W = random_hermitian_weights(n, (seed, 7))
            if seed % 2:
                w = W.array.copy()
                w[np.arange(n), np.arange(n), 0] = np.random.default_rng(seed).uniform(0, 2, n)
                W = WeightMatrix(w)
            x0 = random_state(n, K, (seed, 8))
            Kd = None if model == "cv" else K
            events = []
            run(model, "async", W, x0, Kd, t_max=40,
                on_transition=lambda i, b, a: events.append((i, b, a)) if b != a else None)
            for i, before, after in events:
                d = decompose(W, before, after, i, Kd)
                E_before = float(-0.5 * before.flat() @ (W.real_matrix @ before.flat()))
                if d.identity_residual > 1e-9 * (1 + abs(E_before)):
                    identity_bad += 1
                if d.X3_closed is not None:
                    closed_checked += 1
                    if abs(d.X3_closed - d.X3) > 1e-9:
                        closed_bad += 1
                count += 1
            seed += 1
    elapsed = time.perf_counter() - start
    criterion("C6", ">= 1e4 transitions", count >= 10_000, f"{count}")
    criterion("C6", "identity residual", identity_bad == 0, f"{identity_bad} of {count}")
    criterion("C6", "closed-form X3", closed_bad == 0, f"{closed_bad} of {closed_checked}")
    criterion("C6", "runtime < 30 s", elapsed < 30.0, f"{elapsed:.2f} s")
    assert identity_bad == 0 and closed_bad == 0
    assert elapsed < 30.0


DESK = SweepConfig(n=20, trials=30, t_max=200, resolutions=[(2 ** m,) * 3 for m in (1, 2, 4, 8, 17)])


@pytest.fixture(scope="module")
def desk_sweep():
    start = time.perf_counter()
    res = convergence_sweep(DESK)
    return res, time.perf_counter() - start


def test_c7_runtime(desk_sweep, criterion):
    _, elapsed = desk_sweep
    criterion("C7", "runtime < 10 min", elapsed < 600, f"{elapsed:.1f} s")
    assert elapsed < 600


@pytest.mark.parametrize("K", DESK.resolutions, ids=lambda K: f"K{K[0]}")
def test_c7_parallel_mv3_never_converges(desk_sweep, criterion, K):
    p = desk_sweep[0].probability("mv3", "parallel", K)
    criterion("C7", f"P(parallel MV3) = 0 at K={K[0]}", p == 0.0, f"{p:.3f}")
    assert p == 0.0


@pytest.mark.parametrize("K", [K for K in DESK.resolutions if K[0] >= 4], ids=lambda K: f"K{K[0]}")
def test_c7_async_mv3_mostly_converges(desk_sweep, criterion, K):
    p = desk_sweep[0].probability("mv3", "async", K)
    criterion("C7", f"P(async MV3) >= 0.8 at K={K[0]}", p >= 0.8, f"{p:.3f}")
    assert p >= 0.8


def test_c7_large_k_agreement(desk_sweep, criterion):
    res = desk_sweep[0]
    K = (2 ** 17,) * 3
    diff = [t for t in range(DESK.trials)
            if res.verdict(t, "mv3", "async", K) != res.verdict(t, "cv", "async", K)]
    criterion("C7", "async MV3 verdict = async CV verdict on every trial at K=2^17", not diff,
              f"trials {diff} differ")
    assert not diff


@pytest.mark.parametrize("model", ["mv", "mv3", "cv"])
def test_c7_parallel_not_above_async(desk_sweep, criterion, model):
    res = desk_sweep[0]
    bad = [K[0] for K in DESK.resolutions
           if res.probability(model, "parallel", K) > res.probability(model, "async", K)]
    criterion("C7", f"P(parallel) <= P(async) for {model}", not bad, f"fails at K={bad}")
    assert not bad


def test_c8_round_trips(criterion):
    rng = np.random.default_rng(8)
    phi = rng.uniform(-np.pi, np.pi, 100_000)
    psi = rng.uniform(-np.pi / 4, np.pi / 4, 100_000)
    theta = rng.uniform(-np.pi / 2, np.pi / 2, 100_000)
    mag = rng.uniform(0.1, 10.0, 100_000)
    worst = 0.0
    skipped = 0
    for a, b, c, m in zip(phi, psi, theta, mag):
        q = from_phase_angles(PhaseTriple(a, b, c), m)
        if not is_in_A(q):
            # |psi| within ~2e-5 of pi/4: no unique angles to recover
            skipped += 1
            continue
        r = from_phase_angles(to_phase_angles(q), m)
        worst = max(worst, max(abs(x - y) for x, y in zip(q, r)))
    criterion("C8", "1e5 round trips within 1e-10", worst <= 1e-10, f"worst {worst:.2e}, {skipped} near lock")
    assert worst <= 1e-10


def test_c8_quantize_audit(criterion):
    # runs last in this module so the audit covers every earlier criterion
    if QUANTIZE_AUDIT.calls == 0:
        reproduce_example(1)
    calls, viol = QUANTIZE_AUDIT.calls, QUANTIZE_AUDIT.violations
    criterion("C8", "quantize bound checked on every call", calls > 0, f"{calls} calls")
    criterion("C8", "zero quantize bound violations", viol == 0, f"{viol} violations, worst excess {QUANTIZE_AUDIT.worst:.2e}")
    assert calls > 0 and viol == 0
