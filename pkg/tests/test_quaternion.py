import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhnn.quaternion import (
    GIMBAL_LOCK,
    I,
    J,
    K,
    ONE,
    ZERO,
    NotRepresentable,
    PhaseTriple,
    Quaternion,
    add,
    conjugate,
    format_quaternion,
    from_phase_angles,
    is_in_A,
    multiply,
    norm,
    real_inner,
    real_part,
    to_phase_angles,
    vector_part,
)

EPS = np.finfo(float).eps
V1 = Quaternion(-0.1121, 1.577, -5.207, 7.028)

# tiny magnitudes underflow when squared inside norm(); flush them to zero
finite = st.floats(min_value=-1e3, max_value=1e3).map(lambda v: 0.0 if abs(v) < 1e-100 else v)
quats = st.builds(Quaternion, finite, finite, finite, finite)
angles = st.builds(
    PhaseTriple,
    st.floats(min_value=-math.pi, max_value=math.pi, exclude_max=True),
    st.floats(min_value=-math.pi / 4 + 1e-3, max_value=math.pi / 4 - 1e-3),
    st.floats(min_value=-math.pi / 2, max_value=math.pi / 2, exclude_max=True),
)


def close(p, q, tol):
    return all(abs(a - b) <= tol for a, b in zip(p, q))


def test_unit_products():
    assert multiply(I, J) == K
    assert multiply(J, K) == I
    assert multiply(K, I) == J
    for u in (I, J, K):
        assert multiply(u, u) == -ONE
    assert multiply(multiply(I, J), K) == -ONE


def test_non_commutative():
    assert multiply(I, J) == -multiply(J, I)


def test_example_potential_product():
    # w12 * x2(0) for the built-in two-neuron instance
    w12 = Quaternion(5, 1, 7, 2)
    x2 = Quaternion(-0.2706, -0.6533, -0.2706, 0.6533)
    assert close(multiply(w12, x2), (-0.1121, 1.577, -5.207, 7.028), 5e-4)


def test_identity_element():
    rng = random.Random(3)
    for _ in range(20):
        q = Quaternion(*(rng.gauss(0, 1) for _ in range(4)))
        assert multiply(q, ONE) == q
        assert multiply(ONE, q) == q


def test_add_conjugate_norm():
    q = Quaternion(1, 2, 3, 4)
    assert conjugate(q) == Quaternion(1, -2, -3, -4)
    assert add(q, conjugate(q)) == Quaternion(2, 0, 0, 0)
    assert real_part(q) == 1
    assert vector_part(q) == Quaternion(0, 2, 3, 4)
    assert norm(V1) == pytest.approx(8.888, abs=1e-3)
    assert norm(Quaternion()) == 0.0
    # |q|^2 = conj(q) q
    assert multiply(conjugate(q), q).q0 == pytest.approx(norm(q) ** 2)


def test_real_inner_against_numpy_dot():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p, q = rng.standard_normal(4), rng.standard_normal(4)
        assert real_inner(Quaternion(*p), Quaternion(*q)) == pytest.approx(float(np.dot(p, q)), rel=1e-14, abs=1e-14)
    assert real_inner(I, J) == 0.0
    assert real_inner(V1, V1) == pytest.approx(norm(V1) ** 2)


@given(quats)
def test_double_conjugate(q):
    assert conjugate(conjugate(q)) == q


@given(quats, quats)
def test_norm_multiplicative(p, q):
    expected = norm(p) * norm(q)
    assert abs(norm(multiply(p, q)) - expected) <= 8 * EPS * max(expected, 1e-300)


@given(quats, quats, quats)
def test_associative(p, q, r):
    lhs = multiply(multiply(p, q), r)
    rhs = multiply(p, multiply(q, r))
    scale = norm(p) * norm(q) * norm(r)
    assert all(abs(a - b) <= 8 * EPS * scale for a, b in zip(lhs, rhs))


@given(quats, quats)
def test_cauchy_schwarz(p, q):
    assert real_inner(p, q) <= norm(p) * norm(q) * (1 + 4 * EPS)


def test_from_phase_angles_examples():
    x0 = from_phase_angles(PhaseTriple(-math.pi / 2, -math.pi / 8, -math.pi / 4))
    assert close(x0, (-0.2706, -0.6533, -0.2706, 0.6533), 5e-5)
    assert from_phase_angles(PhaseTriple(0, 0, 0)) == ONE


def test_from_phase_angles_hand_expansion():
    phi, psi, theta = math.pi / 2, math.pi / 8, math.pi / 4
    cf, sf = math.cos(phi), math.sin(phi)
    cs, ss = math.cos(psi), math.sin(psi)
    ct, st_ = math.cos(theta), math.sin(theta)
    expected = (
        cf * cs * ct + sf * ss * st_,
        sf * cs * ct - cf * ss * st_,
        cf * cs * st_ - sf * ss * ct,
        sf * cs * st_ + cf * ss * ct,
    )
    assert close(from_phase_angles(PhaseTriple(phi, psi, theta)), expected, 1e-15)


@given(angles, st.floats(min_value=1e-3, max_value=1e3))
def test_from_phase_angles_norm(p, m):
    assert norm(from_phase_angles(p, m)) == pytest.approx(m, rel=4 * EPS)


def test_to_phase_angles_example():
    assert close(to_phase_angles(V1), (2.1939, 0.09455, 1.4181), 5e-4)
    assert to_phase_angles(ONE) == (0.0, 0.0, 0.0)


@settings(max_examples=1000)
@given(angles, st.floats(min_value=1e-2, max_value=1e2))
def test_phase_angle_round_trip(p, m):
    q = from_phase_angles(p, m)
    r = to_phase_angles(q)
    assert -math.pi <= r.phi < math.pi
    assert -math.pi / 2 <= r.theta < math.pi / 2
    assert abs(r.psi) <= math.pi / 4
    assert close(from_phase_angles(r, m), q, 1e-10 * max(1.0, m))
    assert close(r, p, 1e-6)


def test_half_open_boundaries():
    # theta = pi/2 and phi = pi have to come back at the lower end of their ranges
    q = from_phase_angles(PhaseTriple(0.3, 0.1, math.pi / 2))
    r = to_phase_angles(q)
    assert -math.pi / 2 <= r.theta < math.pi / 2
    assert close(from_phase_angles(r), q, 1e-12)
    q = from_phase_angles(PhaseTriple(math.pi, 0.1, 0.2))
    r = to_phase_angles(q)
    assert -math.pi <= r.phi < math.pi
    assert close(from_phase_angles(r), q, 1e-12)


def test_not_representable():
    with pytest.raises(NotRepresentable) as exc:
        to_phase_angles(Quaternion())
    assert exc.value.reason == ZERO
    locked = from_phase_angles(PhaseTriple(math.pi / 3, math.pi / 4, 0.0))
    with pytest.raises(NotRepresentable) as exc:
        to_phase_angles(locked)
    assert exc.value.reason == GIMBAL_LOCK


def test_is_in_A():
    assert not is_in_A(Quaternion())
    assert not is_in_A(from_phase_angles(PhaseTriple(math.pi / 3, math.pi / 4, 0.0)))
    assert not is_in_A(from_phase_angles(PhaseTriple(math.pi / 3, -math.pi / 4, 0.5)))
    assert is_in_A(V1)


def test_format():
    assert format_quaternion(V1) == "-0.1121 + 1.577i - 5.207j + 7.028k"
    assert str(Quaternion(1, 0, -0.5, 2)) == "1 + 0i - 0.5j + 2k"
