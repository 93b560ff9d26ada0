"""Quaternion arithmetic and the phase-angle factorization q = |q| e^{i phi} e^{k psi} e^{j theta}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

# Half-width of the rejection band around |psi| = pi/4, applied to the arcsin argument.
GIMBAL_EPS = 1e-9

HALF_PI = 0.5 * math.pi
QUARTER_PI = 0.25 * math.pi


@dataclass(frozen=True, slots=True)
class Quaternion:
    q0: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    @classmethod
    def from_seq(cls, values: Iterable[float]) -> Quaternion:
        q0, q1, q2, q3 = (float(v) for v in values)
        return cls(q0, q1, q2, q3)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q0, self.q1, self.q2, self.q3)

    def __iter__(self):
        return iter(self.as_tuple())

    def __add__(self, other: Quaternion) -> Quaternion:
        return add(self, other)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.q0 - other.q0, self.q1 - other.q1,
                          self.q2 - other.q2, self.q3 - other.q3)

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return multiply(self, other)
        s = float(other)
        return Quaternion(s * self.q0, s * self.q1, s * self.q2, s * self.q3)

    def __rmul__(self, other):
        s = float(other)
        return Quaternion(s * self.q0, s * self.q1, s * self.q2, s * self.q3)

    def conjugate(self) -> Quaternion:
        return conjugate(self)

    def norm(self) -> float:
        return norm(self)

    def __str__(self) -> str:
        return format_quaternion(self)


class PhaseTriple(NamedTuple):
    """Angles (phi, psi, theta) in radians.

    Ranges: phi in [-pi, pi), psi in [-pi/4, pi/4], theta in [-pi/2, pi/2).
    """

    phi: float
    psi: float
    theta: float


class NotRepresentable(ValueError):
    """Raised when a quaternion has no unique phase-angle representation."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


ZERO = "zero"
GIMBAL_LOCK = "gimbal-lock"

ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def mul4(p, q) -> tuple[float, float, float, float]:
    """Hamilton product of two 4-sequences, returned as a tuple."""
    p0, p1, p2, p3 = p
    q0, q1, q2, q3 = q
    return (
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + q0 * p1 + p2 * q3 - p3 * q2,
        p0 * q2 + q0 * p2 + p3 * q1 - p1 * q3,
        p0 * q3 + q0 * p3 + p1 * q2 - p2 * q1,
    )


def multiply(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(*mul4(p.as_tuple(), q.as_tuple()))


def add(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(p.q0 + q.q0, p.q1 + q.q1, p.q2 + q.q2, p.q3 + q.q3)


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.q0, -q.q1, -q.q2, -q.q3)


def norm(q: Quaternion) -> float:
    return math.sqrt(q.q0 * q.q0 + q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3)


def real_part(q: Quaternion) -> float:
    return q.q0


def vector_part(q: Quaternion) -> Quaternion:
    return Quaternion(0.0, q.q1, q.q2, q.q3)


def real_inner(p: Quaternion, q: Quaternion) -> float:
    """Re(conj(q) p), i.e. the Euclidean inner product of p and q in R^4."""
    return p.q0 * q.q0 + p.q1 * q.q1 + p.q2 * q.q2 + p.q3 * q.q3


def compose_angles(phi: float, psi: float, theta: float) -> tuple[float, float, float, float]:
    """Unit quaternion e^{i phi} e^{k psi} e^{j theta} as a tuple."""
    left = mul4((math.cos(phi), math.sin(phi), 0.0, 0.0),
                (math.cos(psi), 0.0, 0.0, math.sin(psi)))
    return mul4(left, (math.cos(theta), 0.0, math.sin(theta), 0.0))


def from_phase_angles(p: PhaseTriple, magnitude: float = 1.0) -> Quaternion:
    if magnitude < 0:
        raise ValueError("magnitude must be nonnegative")
    q = compose_angles(p[0], p[1], p[2])
    if magnitude == 1.0:
        return Quaternion(*q)
    return Quaternion(*(magnitude * c for c in q))


def phase_angles4(q0: float, q1: float, q2: float, q3: float) -> tuple[float, float, float]:
    """Scalar core of :func:`to_phase_angles`; raises NotRepresentable outside the set A."""
    n2 = q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3
    if n2 == 0.0:
        raise NotRepresentable(ZERO)
    s = 2.0 * (q0 * q3 - q1 * q2) / n2
    if abs(s) >= 1.0 - GIMBAL_EPS:
        raise NotRepresentable(GIMBAL_LOCK)
    psi = 0.5 * math.asin(s)
    phi = 0.5 * math.atan2(2.0 * (q0 * q1 + q2 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3)
    theta = 0.5 * math.atan2(2.0 * (q0 * q2 + q1 * q3), q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3)
    # atan2 returns (-pi, pi], so the halved angle lands in (-pi/2, pi/2]. The two
    # square roots of the phi/theta rotation differ by pi; pick the one whose
    # recomposition reproduces the sign of q.
    if theta >= HALF_PI:
        theta -= math.pi
    c = compose_angles(phi, psi, theta)
    if c[0] * q0 + c[1] * q1 + c[2] * q2 + c[3] * q3 < 0.0:
        phi = phi - math.pi if phi >= 0.0 else phi + math.pi
    if phi >= math.pi:
        phi -= 2.0 * math.pi
    return phi, psi, theta


def to_phase_angles(q: Quaternion) -> PhaseTriple:
    return PhaseTriple(*phase_angles4(q.q0, q.q1, q.q2, q.q3))


def is_in_A(q: Quaternion) -> bool:
    try:
        phase_angles4(q.q0, q.q1, q.q2, q.q3)
    except NotRepresentable:
        return False
    return True


def _sig4(x: float) -> str:
    return f"{x:.4g}"


def format_quaternion(q) -> str:
    """Render as ``a + bi + cj + dk`` with 4 significant digits."""
    q0, q1, q2, q3 = q
    out = _sig4(q0)
    for c, unit in ((q1, "i"), (q2, "j"), (q3, "k")):
        sign = "-" if c < 0 or (c == 0 and math.copysign(1.0, c) < 0) else "+"
        out += f" {sign} {_sig4(abs(c))}{unit}"
    return out
