"""
Penalty dual decomposition for the RIS scattering-matrix block.

With P, W and the auxiliary variables fixed, the quadratic-transform surrogate
is a concave quadratic in vec(Phi)::

    f(Phi) = const + 2 Re{c^H vec(Phi)} - vec(Phi)^H Q vec(Phi)

Each diagonal block Phi_g is optimized in turn. The unitary constraint is moved
onto a copy Psi_g tied to Phi_g through an augmented Lagrangian; the inner loop
alternates an exact linear solve for Phi_g with a Procrustes projection for
Psi_g, the outer loop either updates the dual Lambda_g or shrinks the penalty
rho. In reciprocal mode Phi_g is parametrized by its lower triangle, so every
iterate is exactly symmetric.

The penalty loop stops at the first feasible point, which need not be a
stationary one, so each block is then refined by monotone projected steps and
the blocks are swept until the whole matrix stops moving.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from models.errors import InvalidArgumentError, NumericalFailureError

logger = logging.getLogger(__name__)

RIDGE_SCALE = 1e-12
RHO_FLOOR = 1e-300
CURVATURE_FLOOR = 1e-300


@dataclass
class CouplingMatrices:
    """Products of the fixed blocks that the scattering surrogate depends on."""

    A1: np.ndarray
    A2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray
    D: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    J1: np.ndarray
    J2: np.ndarray

    @property
    def n_elements(self):
        return self.A1.shape[0]


@dataclass
class PddState:
    phi_groups: list
    psi_groups: list
    lambda_groups: list
    rho: float


@dataclass
class PddTraceRow:
    group: int
    outer_iter: int
    inner_iters: int
    rho: float
    violation_inf_norm: float
    inner_objective: float


@dataclass
class PddResult:
    scattering: np.ndarray
    violation: float
    converged: bool
    trace: list = field(default_factory=list)
    sweeps: int = 1


def build_permutation(m_g, reciprocal):
    """Map from the free parameters of Phi_g to vec(Phi_g).

    Non-reciprocal blocks use every entry. Reciprocal blocks keep the diagonal
    and lower triangle column by column; each free entry fills both (p, q) and
    (q, p).
    """
    if m_g < 1:
        raise InvalidArgumentError(f"group size must be positive, got {m_g}")
    if not reciprocal:
        return np.eye(m_g * m_g)
    perm = np.zeros((m_g * m_g, m_g * (m_g + 1) // 2))
    for q in range(1, m_g + 1):
        for p in range(q, m_g + 1):
            j = (q - 1) * (2 * m_g - q + 2) // 2 + (p - q + 1)
            perm[(p - 1) * m_g + q - 1, j - 1] = 1.0
            perm[(q - 1) * m_g + p - 1, j - 1] = 1.0
    return perm


def group_vec_indices(m_total, m_g, g):
    """Positions in vec(Phi) (column-major) of the entries of block ``g``, in vec(Phi_g) order."""
    n_groups = m_total // m_g
    if not 0 <= g < n_groups:
        raise InvalidArgumentError(f"group index {g} out of range [0, {n_groups})")
    offset = g * m_g
    cols, rows = np.meshgrid(np.arange(m_g), np.arange(m_g), indexing="ij")
    return ((offset + cols) * m_total + offset + rows).ravel()


def build_reshape(m_total, m_g, g):
    """Binary matrix placing vec(Phi_g) of block ``g`` (0-based) into vec(Phi)."""
    if m_g < 1 or m_total % m_g:
        raise InvalidArgumentError(f"group size {m_g} does not divide {m_total}")
    reshape = np.zeros((m_total * m_total, m_g * m_g))
    reshape[group_vec_indices(m_total, m_g, g), np.arange(m_g * m_g)] = 1.0
    return reshape


def vec(matrix):
    return np.asarray(matrix).flatten(order="F")


def unvec(vector, m):
    return np.asarray(vector).reshape((m, m), order="F")


def free_parameters(phi_g, reciprocal):
    """Inverse of ``build_permutation``: free vector of a (symmetric) block."""
    perm = build_permutation(phi_g.shape[0], reciprocal)
    return (perm.T @ vec(phi_g)) / perm.sum(axis=0)


def split_groups(phi, m_g):
    m = phi.shape[0]
    return [phi[s : s + m_g, s : s + m_g].copy() for s in range(0, m, m_g)]


def trace_vec_identity_check(c, phi, m_g, reciprocal):
    """Both sides of Tr(C Phi) = vec(C^T)^T sum_g R_g K_g phi_g."""
    c = np.asarray(c, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    m = phi.shape[0]
    perm = build_permutation(m_g, reciprocal)
    stacked = np.zeros(m * m, dtype=complex)
    for g, block in enumerate(split_groups(phi, m_g)):
        stacked += build_reshape(m, m_g, g) @ (perm @ free_parameters(block, reciprocal))
    return complex(np.trace(c @ phi)), complex(vec(c.T) @ stacked)


def quadratic_vec_identity_check(a, b, phi):
    """Both sides of Tr(B Phi A Phi^H) = vec(Phi)^H (A^T kron B) vec(Phi)."""
    phi_vec = vec(phi)
    lhs = np.trace(b @ phi @ a @ phi.conj().T)
    rhs = phi_vec.conj() @ np.kron(a.T, b) @ phi_vec
    return complex(lhs), complex(rhs)


def assemble_coupling(state, ch, ris, aux):
    """Coupling matrices for the current precoder, combiner and auxiliary variables."""
    g = ch.g_bs_ris
    p, w = state.precoder, state.combiner
    h_ref_dl, h_ref_ul = ch.h_ref_dl, ch.h_ref_ul
    tau_dl2 = np.abs(aux.tau_dl) ** 2
    tau_ul2 = np.abs(aux.tau_ul) ** 2

    gp = g @ p
    gw = g.conj() @ w
    a1 = gp @ gp.conj().T
    a2 = (gw * tau_ul2) @ gw.conj().T
    b1 = h_ref_dl.conj().T @ (tau_dl2[:, None] * h_ref_dl)
    b2 = h_ref_ul.T @ h_ref_ul.conj()

    c1 = gp @ ((np.sqrt(1 + aux.iota_dl) * aux.tau_dl.conj())[:, None] * h_ref_dl)
    c2 = h_ref_ul.T @ ((np.sqrt(1 + aux.iota_ul) * aux.tau_ul.conj())[:, None] * gw.conj().T)

    p_cov = p @ p.conj().T
    w_cov = (w * tau_ul2) @ w.conj().T
    d1 = g @ p_cov @ (ch.h_dir_dl.conj().T @ (tau_dl2[:, None] * h_ref_dl))
    d2 = h_ref_ul.T @ (ch.h_dir_ul_dl.conj() @ (tau_dl2[:, None] * h_ref_dl))
    d3 = h_ref_ul.T @ ch.h_dir_ul_bs.conj() @ w_cov @ g.T
    d = g @ p_cov @ ch.h_si.conj().T @ w_cov @ g.T

    return CouplingMatrices(
        A1=a1, A2=a2, B1=b1, B2=b2, C1=c1, C2=c2,
        D1=d1, D2=d2, D3=d3, D=d,
        F1=a1 @ b1, F2=b2 @ a2, J1=b2 @ b1, J2=a1 @ a2,
    )


def linear_coefficient(coupling, alpha_dl, p_ul, structural):
    """C_tot such that the surrogate's linear part is 2 Re Tr(C_tot Phi)."""
    s = 1.0 if structural else 0.0
    cm = coupling
    dl = cm.C1 + s * cm.F1 - cm.D1 + p_ul * (s * cm.J1 - cm.D2)
    ul = np.sqrt(p_ul) * cm.C2 + p_ul * (s * cm.F2 - cm.D3) + s * cm.J2 - cm.D
    return alpha_dl * dl + (1 - alpha_dl) * ul


def quadratic_apply(coupling, x, alpha_dl, p_ul):
    """Matrix form of Q vec(X), using (A^T kron B) vec(X) = vec(B X A)."""
    cm = coupling
    dl = cm.B1 @ x @ cm.A1 + p_ul * cm.B1 @ x @ cm.B2
    ul = p_ul * cm.A2 @ x @ cm.B2 + cm.A2 @ x @ cm.A1
    return alpha_dl * dl + (1 - alpha_dl) * ul


def quadratic_block(coupling, block, alpha_dl, p_ul):
    """Restriction of Q to the vec(Phi_g) coordinates of the index slice ``block``."""
    cm = coupling
    a1, a2 = cm.A1[block, block], cm.A2[block, block]
    b1, b2 = cm.B1[block, block], cm.B2[block, block]
    dl = np.kron(a1.T, b1) + p_ul * np.kron(b2.T, b1)
    ul = p_ul * np.kron(b2.T, a2) + np.kron(a1.T, a2)
    return alpha_dl * dl + (1 - alpha_dl) * ul


def surrogate_value(coupling, phi, alpha_dl, p_ul, structural):
    """Phi-dependent part of the surrogate (nats): 2 Re Tr(C Phi) - vec^H Q vec."""
    c_tot = linear_coefficient(coupling, alpha_dl, p_ul, structural)
    quad = np.vdot(phi, quadratic_apply(coupling, phi, alpha_dl, p_ul))
    return float(2 * np.real(np.trace(c_tot @ phi)) - np.real(quad))


class GroupSubproblem:
    """Quadratic model of one block with the other blocks held fixed.

    Minimizes, over the free vector x of Phi_g = unvec(K x)::

        x^H Kt Q_g K x - 2 Re{x^H K^H b}
            + (1/2rho) ||Phi_g - Psi_g||^2 + Re Tr(Lambda_g^H (Phi_g - Psi_g))

    ``curvature`` is the largest eigenvalue of Q_g; penalties and stopping
    rules are measured against it so that they do not depend on the channel
    scale.
    """

    def __init__(self, g, coupling, phi, m_g, reciprocal, alpha_dl, p_ul, structural):
        m = coupling.n_elements
        self.m_g = m_g
        self.reciprocal = reciprocal
        self.perm = build_permutation(m_g, reciprocal)
        block = slice(g * m_g, (g + 1) * m_g)

        others = phi.copy()
        others[block, block] = 0.0
        c_tot = linear_coefficient(coupling, alpha_dl, p_ul, structural)
        base = vec(c_tot.T[block, block]).conj() - vec(quadratic_apply(coupling, others, alpha_dl, p_ul)[block, block])
        q_g = quadratic_block(coupling, block, alpha_dl, p_ul)
        q_g = (q_g + q_g.conj().T) / 2

        self.q_vec = q_g
        self.b_vec = base
        if reciprocal:
            self.q_free = self.perm.T @ q_g @ self.perm
            self.b_free = self.perm.T @ base
        else:
            self.q_free = q_g
            self.b_free = base
        self.gram = np.diag(self.perm.sum(axis=0))
        self.n_elements = m

        dim = q_g.shape[0]
        top = float(linalg.eigvalsh(q_g, subset_by_index=[dim - 1, dim - 1])[0])
        self.curvature = top if top > CURVATURE_FLOOR else 1.0

    def hessian(self, rho):
        if rho <= 0:
            raise InvalidArgumentError(f"penalty parameter must be positive, got {rho}")
        delta = self.q_free + self.gram / (2 * rho)
        return (delta + delta.conj().T) / 2

    def rhs(self, psi, lam, rho):
        if rho <= 0:
            raise InvalidArgumentError(f"penalty parameter must be positive, got {rho}")
        return self.b_free + self.perm.T @ (vec(psi) / (2 * rho) - vec(lam) / 2)

    def block(self, x):
        return unvec(self.perm @ x, self.m_g)

    def objective(self, x, psi, lam, rho):
        """Augmented Lagrangian value, up to a constant."""
        phi_g = self.block(x)
        gap = phi_g - psi
        value = (
            np.real(np.vdot(x, self.q_free @ x))
            - 2 * np.real(np.vdot(x, self.b_free))
            + np.linalg.norm(gap) ** 2 / (2 * rho)
            + np.real(np.vdot(lam, gap))
        )
        return float(value)

    def value(self, phi_g):
        """Block objective vec^H Q_g vec - 2 Re{vec^H b}; lower is better."""
        v = vec(phi_g)
        return float(np.real(np.vdot(v, self.q_vec @ v)) - 2 * np.real(np.vdot(v, self.b_vec)))

    def gradient(self, phi_g):
        return unvec(self.q_vec @ vec(phi_g) - self.b_vec, self.m_g)

    def feasible(self, x):
        """Closest (symmetric, in reciprocal mode) unitary matrix to ``x``."""
        return project_symmetric_unitary(x) if self.reciprocal else project_unitary(x)


def assemble_quadratic(g, coupling, pdd_state, ris, alpha_dl, p_ul):
    """Delta and delta of block ``g`` at the current PDD state."""
    m = coupling.n_elements
    m_g = ris.group_size_for(m)
    phi = linalg.block_diag(*pdd_state.phi_groups)
    sub = GroupSubproblem(g, coupling, phi, m_g, ris.reciprocal, alpha_dl, p_ul, ris.structural_scattering)
    rho = pdd_state.rho
    return sub.hessian(rho), sub.rhs(pdd_state.psi_groups[g], pdd_state.lambda_groups[g], rho)


def factor_hessian(delta_mat):
    """Cholesky factor of Delta, adding a trace-scaled ridge when it is singular."""
    if not np.all(np.isfinite(delta_mat)):
        raise NumericalFailureError("quadratic model has non-finite entries")
    try:
        return linalg.cho_factor(delta_mat, lower=True)
    except linalg.LinAlgError:
        dim = delta_mat.shape[0]
        ridge = RIDGE_SCALE * max(np.real(np.trace(delta_mat)) / dim, np.finfo(float).tiny)
        try:
            return linalg.cho_factor(delta_mat + ridge * np.eye(dim), lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalFailureError("quadratic model is not positive semidefinite") from exc


def solve_phi_group(delta_mat, delta_vec, factor=None):
    """Minimizer of x^H Delta x - 2 Re{x^H delta}."""
    delta_vec = np.atleast_1d(np.asarray(delta_vec, dtype=complex))
    if not np.all(np.isfinite(delta_vec)):
        raise NumericalFailureError("linear term has non-finite entries")
    if factor is None:
        factor = factor_hessian(np.atleast_2d(np.asarray(delta_mat, dtype=complex)))
    return linalg.cho_solve(factor, delta_vec)


def project_unitary(x):
    """Nearest unitary matrix in Frobenius norm (orthogonal Procrustes)."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    u, _, vh = linalg.svd(x)
    return u @ vh


def project_symmetric_unitary(x):
    """Unitary projection of the symmetric part, symmetrized exactly."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    y = project_unitary((x + x.T) / 2)
    return (y + y.T) / 2


def _pdd_group(g, sub, phi_g, opts, trace):
    """Two-loop PDD on one block; returns (Psi_g, violation, converged).

    ``rho`` is kept relative to the block curvature, so the trace reports the
    scale-free penalty and the actual one is ``rho / sub.curvature``.
    """
    rho = opts.rho_init
    switch_eps = opts.dual_switch_eps0
    x = free_parameters(phi_g, sub.reciprocal)
    psi = project_unitary(phi_g)
    lam = np.zeros_like(psi)
    violation = np.inf

    for outer in range(1, opts.outer_max + 1):
        penalty = rho / sub.curvature
        factor = factor_hessian(sub.hessian(penalty))
        previous = np.inf
        inner_iters = 0
        value = np.nan
        for inner_iters in range(1, opts.inner_max + 1):
            x = solve_phi_group(None, sub.rhs(psi, lam, penalty), factor=factor)
            phi_g = sub.block(x)
            psi = project_unitary(penalty * lam + phi_g)
            value = sub.objective(x, psi, lam, penalty)
            if abs(previous - value) <= opts.inner_tol * max(sub.curvature, abs(value)):
                break
            previous = value

        violation = float(np.max(np.abs(phi_g - psi)))
        if not np.isfinite(violation):
            raise NumericalFailureError(f"group {g}: non-finite constraint violation", iteration=outer)
        trace.append(PddTraceRow(g, outer, inner_iters, rho, violation, value))

        if violation <= opts.outer_eps:
            logger.debug("group %d: violation %.3e after %d outer iterations", g, violation, outer)
            return psi, violation, True
        if violation < switch_eps:
            lam = lam + (phi_g - psi) / penalty
            step = "dual update"
        else:
            rho *= opts.c_penalty
            step = "penalty increase"
        logger.debug("group %d outer %d: rho=%.3e violation=%.3e %s", g, outer, rho, violation, step)
        switch_eps = max(opts.dual_switch_decay * violation, opts.outer_eps)
        if rho < RHO_FLOOR:
            raise NumericalFailureError(f"group {g}: penalty parameter underflow", iteration=outer)

    logger.warning(
        "group %d: PDD stopped at outer_max=%d with violation %.3e", g, opts.outer_max, violation
    )
    return psi, violation, False


def refine_group(sub, phi_g, opts):
    """Descend the block objective over the feasible set until Phi_g stops moving.

    A single element has the exact solution b / |b|. Larger blocks take
    majorize-minimize steps Phi_g <- proj(L Phi_g - grad), L the block
    curvature; every step maximizes a tight linear minorant over the
    (symmetric) unitary set, so the block objective never increases.

    Returns:
        Tuple (block, steps taken).
    """
    if sub.m_g == 1:
        b = sub.b_vec[0]
        if b == 0:
            return phi_g, 0
        return np.array([[b / abs(b)]], dtype=complex), 1

    for step in range(1, opts.refine_max + 1):
        new = sub.feasible(sub.curvature * phi_g - sub.gradient(phi_g))
        moved = float(np.linalg.norm(new - phi_g))
        phi_g = new
        if moved <= opts.stationarity_tol:
            return phi_g, step
    return phi_g, opts.refine_max


def _update_group(g, sub, phi_g, opts, trace, run_penalty_loop):
    violation, converged = 0.0, True
    if sub.m_g > 1 and run_penalty_loop:
        psi, violation, converged = _pdd_group(g, sub, phi_g, opts, trace)
        candidate = sub.feasible(psi) if sub.reciprocal else psi
        if sub.value(candidate) <= sub.value(phi_g):
            phi_g = candidate
        else:
            logger.debug("group %d: PDD block kept out, block objective would increase", g)
    block, steps = refine_group(sub, phi_g, opts)
    logger.debug("group %d: %d refinement steps", g, steps)
    return block, violation, converged


def run_pdd(state, ch, ris, aux, opts, alpha_dl):
    """Optimize the scattering matrix with P, W and the auxiliary variables fixed.

    The first sweep runs the penalty dual decomposition on every block, each
    seeing the latest value of the others; its result is kept only when it
    lowers the block objective. Every sweep then refines each block to
    stationarity, and sweeps repeat until no block moves by more than
    ``opts.stationarity_tol``. Blocks are built from unitary projections, so
    the result is exactly feasible; reciprocal blocks are symmetrized.

    Returns:
        PddResult with the block-diagonal scattering matrix, the largest final
        ||Phi_g - Psi_g||_inf of the penalty loops and the per-iteration trace.
    """
    m = ch.n_ris_elements
    m_g = ris.group_size_for(m)
    n_groups = m // m_g
    coupling = assemble_coupling(state, ch, ris, aux)
    phi = np.array(state.scattering, dtype=complex)
    trace = []
    worst = 0.0
    converged = True
    sweep = 0

    for sweep in range(1, opts.max_sweeps + 1):
        moved = 0.0
        for g in range(n_groups):
            sub = GroupSubproblem(
                g, coupling, phi, m_g, ris.reciprocal, alpha_dl, ch.p_ul_linear, ris.structural_scattering
            )
            block = slice(g * m_g, (g + 1) * m_g)
            new, violation, group_converged = _update_group(g, sub, phi[block, block], opts, trace, sweep == 1)
            moved = max(moved, float(np.linalg.norm(new - phi[block, block])))
            phi[block, block] = new
            if sweep == 1:
                worst = max(worst, violation)
                converged = converged and group_converged
        logger.debug("sweep %d: largest block change %.3e", sweep, moved)
        # a single block already sees its final coupling in the first sweep
        if n_groups == 1 or moved <= opts.stationarity_tol:
            break

    return PddResult(scattering=phi, violation=worst, converged=converged, trace=trace, sweeps=sweep)
