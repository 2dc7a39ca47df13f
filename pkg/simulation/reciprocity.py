"""
Single-user received-power bounds and the scattering matrices that attain them.

With blocked direct links and structural scattering, the UL power through the
RIS is |g^T (Phi - I) h_u|^2 for a unitary Phi. The triangle inequality bounds
it by (||g|| ||h_u|| + |g^T h_u|)^2, with equality when Phi maps h_u/||h_u||
onto beta_u g*/||g||. A reciprocal surface can attain the DL and UL bounds
together only if the two target directions are co-linear.
"""

import logging
from dataclasses import dataclass

import numpy as np

from models.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

ATTAINMENT_TOL = 1e-9
UNIT_NORM_TOL = 1e-9


@dataclass
class BoundReport:
    bound_value: float
    phase_beta: complex
    attained: bool
    residual: float

    def to_dict(self):
        return {
            "bound_value": self.bound_value,
            "phase_beta": [self.phase_beta.real, self.phase_beta.imag],
            "attained": self.attained,
            "residual": self.residual,
        }


def _as_nonzero_vector(vector, name):
    vector = np.asarray(vector, dtype=complex).ravel()
    if vector.size == 0 or not np.any(vector):
        raise InvalidArgumentError(f"{name} must be a nonzero vector")
    return vector


def _phase(value):
    return complex(np.exp(1j * np.angle(value)))


def _power_bound(a, b, phi, optimal):
    """Bound on |a^T (Phi - I) b|^2 and its relative shortfall at ``phi``."""
    bound = (np.linalg.norm(a) * np.linalg.norm(b) + abs(a @ b)) ** 2
    beta = _phase(-(a @ b))
    if phi is None:
        phi = optimal(beta)
    achieved = abs(a @ (phi - np.eye(len(a))) @ b) ** 2
    residual = float(max(bound - achieved, 0.0) / bound)
    return BoundReport(float(bound), beta, bool(residual < ATTAINMENT_TOL), residual)


def ul_power_bound(g, h_u, phi=None):
    """UL bound for BS-side channel ``g`` and UL user channel ``h_u``.

    The residual is measured at ``phi`` when given, otherwise at
    :func:`phi_ul_optimal`.
    """
    g = _as_nonzero_vector(g, "g")
    h_u = _as_nonzero_vector(h_u, "h_u")
    return _power_bound(g, h_u, phi, lambda beta: _map_towards(h_u, g, beta))


def dl_power_bound(h_d, g, phi=None):
    """DL counterpart of :func:`ul_power_bound` for |h_d^T (Phi - I) g|^2."""
    h_d = _as_nonzero_vector(h_d, "h_d")
    g = _as_nonzero_vector(g, "g")
    return _power_bound(h_d, g, phi, lambda beta: _map_towards(g, h_d, beta))


def _orthonormal_completion(x):
    """Unitary matrix whose first column is the unit vector ``x``.

    Gram-Schmidt over the standard basis; the basis vector at the largest
    component of ``x`` is the one replaced by ``x``.
    """
    m = len(x)
    pivot = int(np.argmax(np.abs(x)))
    columns = [x]
    for index in range(m):
        if index == pivot:
            continue
        v = np.zeros(m, dtype=complex)
        v[index] = 1.0
        # two passes keep the columns orthogonal to rounding
        for _ in range(2):
            for q in columns:
                v = v - (q.conj() @ v) * q
        columns.append(v / np.linalg.norm(v))
    return np.column_stack(columns)


def construct_unitary_map(src, dst):
    """Unitary Phi with Phi @ src = dst for unit vectors ``src`` and ``dst``."""
    src = np.asarray(src, dtype=complex).ravel()
    dst = np.asarray(dst, dtype=complex).ravel()
    if src.shape != dst.shape:
        raise InvalidArgumentError(f"vector lengths differ: {src.shape} vs {dst.shape}")
    for name, v in (("src", src), ("dst", dst)):
        if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
            raise InvalidArgumentError(f"{name} must have unit norm, got {np.linalg.norm(v)}")
    return _orthonormal_completion(dst) @ _orthonormal_completion(src).conj().T


def _map_towards(source, target, beta):
    # maps source/||source|| onto beta * target^* / ||target||
    return construct_unitary_map(
        source / np.linalg.norm(source),
        beta * target.conj() / np.linalg.norm(target),
    )


def phi_ul_optimal(g, h_u):
    g = _as_nonzero_vector(g, "g")
    h_u = _as_nonzero_vector(h_u, "h_u")
    return _map_towards(h_u, g, _phase(-(g @ h_u)))


def phi_dl_optimal(h_d, g):
    h_d = _as_nonzero_vector(h_d, "h_d")
    g = _as_nonzero_vector(g, "g")
    return _map_towards(g, h_d, _phase(-(h_d @ g)))


def colinearity_gap(h_d, h_u, g=None):
    """Distance between the DL and UL bound-attaining directions.

    With ``g`` the phases beta_d and beta_u come from the bounds; without it
    the relative phase is chosen to minimize the gap.
    """
    h_d = _as_nonzero_vector(h_d, "h_d")
    h_u = _as_nonzero_vector(h_u, "h_u")
    if h_d.shape != h_u.shape:
        raise InvalidArgumentError("h_d and h_u must have the same length")
    a = h_d.conj() / np.linalg.norm(h_d)
    b = h_u.conj() / np.linalg.norm(h_u)
    if g is None:
        return float(np.linalg.norm(a - np.conj(_phase(np.vdot(a, b))) * b))
    g = _as_nonzero_vector(g, "g")
    beta_d = _phase(-(h_d @ g))
    beta_u = _phase(-(g @ h_u))
    return float(np.linalg.norm(beta_d * a - beta_u * b))
