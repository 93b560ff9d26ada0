"""Energy-variation decomposition for a single-neuron transition.

For a change of neuron i from x_i(t) to x_i(t+dt) with potential v_i(t):

    dE = -(X1 - X2) + w_ii (X3 - 1)
    X1 = Re(conj(x_i(t+dt)) v_i),  X2 = Re(conj(x_i(t)) v_i),  X3 = Re(conj(x_i(t+dt)) x_i(t))

For multivalued states the new phase angles are old ones shifted by integer
multiples (a, b, c) of the quanta, and the potential's angles are the new ones
shifted by (dphi, dpsi, dtheta). The decomposition reports both and checks the
two hypotheses used in the classical convergence argument:

    H1: (a == 0 <=> dphi == 0) and (c == 0 <=> dtheta == 0)
    H2: |dphi| < quantum_phi, |dpsi| < quantum_psi, |dtheta| < quantum_theta
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .network import NetworkState, ResolutionFactors, WeightMatrix, activation_potential, energy
from .quaternion import NotRepresentable, Quaternion, norm, real_inner, to_phase_angles

ZERO_TOL = 1e-9


class DecompositionError(ValueError):
    pass


def wrap_pi(angle: float) -> float:
    """Reduce an angle into (-pi, pi]."""
    r = math.remainder(angle, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


def pair_product(d1: float, d2: float, d3: float, psi_ref: float, sign: float = 1.0) -> float:
    """Re(conj(e^{i p} e^{k s} e^{j h}) e^{i(p+d1)} e^{k(s+d2)} e^{j(h+d3)}) with s = psi_ref.

    Depends only on the shifts and the reference psi. ``sign=-1`` gives the
    historically printed variant, which agrees only when sin(d1) sin(d3) = 0.
    """
    return (math.cos(d1) * math.cos(d2) * math.cos(d3)
            + sign * math.sin(d1) * math.sin(2.0 * psi_ref + d2) * math.sin(d3))


def closed_form_x3(a: int, b: int, c: int, psi_before: float, K: ResolutionFactors,
                   sign: float = 1.0) -> float:
    """X3 from the integer steps (a, b, c) and the old psi."""
    return pair_product(a * K.dphi, b * K.dpsi, c * K.dtheta, psi_before, sign)


@dataclass
class DeltaEDecomposition:
    neuron: int
    X1: float
    X2: float
    X3: float
    w_ii: float
    deltaE: float
    deltaE_direct: float
    cosA1: float
    cosA2: float
    cosA3: float
    a: int | None = None
    b: int | None = None
    c: int | None = None
    dphi_shift: float | None = None
    dpsi_shift: float | None = None
    dtheta_shift: float | None = None
    X1_closed: float | None = None
    X2_closed: float | None = None
    X3_closed: float | None = None
    X3_printed: float | None = None
    H1_holds: bool | None = None
    H2_holds: bool | None = None

    @property
    def identity_residual(self) -> float:
        return abs(self.deltaE - self.deltaE_direct)

    @property
    def closed_form_residual(self) -> float | None:
        if self.X3_closed is None:
            return None
        return max(abs(self.X1 - self.X1_closed), abs(self.X2 - self.X2_closed),
                   abs(self.X3 - self.X3_closed))

    def to_dict(self) -> dict:
        return asdict(self)


def cosine_view(x_before: Quaternion, x_after: Quaternion, v_i: Quaternion, i: int | None = None):
    """(cos A1, cos A2, cos A3): angles of x_after vs v, x_before vs v, x_after vs x_before."""
    nv = norm(v_i)
    if nv == 0.0:
        raise DecompositionError("zero activation potential has no direction")

    def cos(p, q, scale):
        return max(-1.0, min(1.0, real_inner(p, q) / scale))

    na, nb = norm(x_after), norm(x_before)
    return (cos(v_i, x_after, nv * na), cos(v_i, x_before, nv * nb), cos(x_before, x_after, na * nb))


def _single_changed_neuron(x_before: NetworkState, x_after: NetworkState, i: int):
    if x_before.n != x_after.n:
        raise DecompositionError("states have different sizes")
    diff = np.any(x_before.array != x_after.array, axis=1)
    if x_before.indices is not None and x_after.indices is not None:
        diff |= np.any(x_before.indices != x_after.indices, axis=1)
    others = [int(j) for j in np.nonzero(diff)[0] if j != i]
    if others:
        raise DecompositionError(f"states also differ at neurons {[j + 1 for j in others]}")


def decompose(W: WeightMatrix, x_before: NetworkState, x_after: NetworkState, i: int,
              K: ResolutionFactors | None = None) -> DeltaEDecomposition:
    """Decompose the energy change of a transition at neuron ``i`` (0-based).

    Integer steps, angle shifts, closed forms and the hypothesis flags are filled
    in only when both states carry phase indices and ``K`` is given.
    """
    _single_changed_neuron(x_before, x_after, i)
    v = activation_potential(W, x_before, i)
    xb, xa = x_before[i], x_after[i]
    w_ii = float(W.array[i, i, 0])
    X1 = real_inner(v, xa)
    X2 = real_inner(v, xb)
    X3 = real_inner(xb, xa)
    dE = -(X1 - X2) + w_ii * (X3 - 1.0)
    dE_direct = energy(W, x_after) - energy(W, x_before)
    if norm(v) > 0.0:
        c1, c2, c3 = cosine_view(xb, xa, v, i)
    else:
        c1 = c2 = math.nan
        c3 = max(-1.0, min(1.0, X3))
    out = DeltaEDecomposition(i + 1, X1, X2, X3, w_ii, dE, dE_direct, c1, c2, c3)

    if K is None or x_before.indices is None or x_after.indices is None:
        return out
    try:
        alpha, beta, gamma = to_phase_angles(v)
    except NotRepresentable as exc:
        raise DecompositionError(f"activation potential outside A ({exc.reason})") from exc
    lb = [int(c) for c in x_before.indices[i]]
    la = [int(c) for c in x_after.indices[i]]
    a, b, c = (la[0] - lb[0], la[1] - lb[1], la[2] - lb[2])
    phi_b, psi_b, theta_b = K.angles(*lb)
    phi_a, psi_a, theta_a = K.angles(*la)
    s_phi = wrap_pi(alpha - phi_a)
    s_psi = wrap_pi(beta - psi_a)
    s_theta = wrap_pi(gamma - theta_a)
    nv = norm(v)
    out.a, out.b, out.c = a, b, c
    out.dphi_shift, out.dpsi_shift, out.dtheta_shift = s_phi, s_psi, s_theta
    out.X3_closed = closed_form_x3(a, b, c, psi_b, K)
    out.X3_printed = closed_form_x3(a, b, c, psi_b, K, sign=-1.0)
    out.X1_closed = nv * pair_product(s_phi, s_psi, s_theta, psi_a)
    out.X2_closed = nv * pair_product(a * K.dphi + s_phi, b * K.dpsi + s_psi, c * K.dtheta + s_theta, psi_b)
    out.H1_holds = ((a == 0) == (abs(s_phi) < ZERO_TOL)) and ((c == 0) == (abs(s_theta) < ZERO_TOL))
    out.H2_holds = abs(s_phi) < K.dphi and abs(s_psi) < K.dpsi and abs(s_theta) < K.dtheta
    return out
