"""
Block coordinate descent over (iota, tau, P, W, Phi) for the weighted sum-rate.
"""

import logging

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from models.errors import NumericalFailureError
from models.state import BcdTraceRow, SolverResult, TransceiverState
from simulation.channel_model import STREAM_SOLVER_INIT, effective_channels, make_generator
from simulation.metrics import rates, weighted_sum_rate

from .fp_transforms import eval_f_tau, update_iota, update_tau
from .pdd_scattering import run_pdd

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-14
WEIGHT_FLOOR = 1e-24
MAX_BRACKET_DOUBLINGS = 2000
# slack when comparing surrogate values across a Phi update
ASCENT_SLACK = 1e-12


def _precoder_system(state, ch, ris, aux, alpha_dl):
    """Hermitian A and right-hand sides B with p_k = (A + mu I)^-1 b_k."""
    h_d, _, _, loop = effective_channels(ch, state.scattering, ris.structural_scattering)
    w = state.combiner
    leak = ch.h_si + loop
    tau_dl2 = np.abs(aux.tau_dl) ** 2
    tau_ul2 = np.abs(aux.tau_ul) ** 2

    a = alpha_dl * h_d.conj().T @ (tau_dl2[:, None] * h_d)
    if w.shape[1]:
        projected = w.conj().T @ leak
        a = a + (1 - alpha_dl) * projected.conj().T @ (tau_ul2[:, None] * projected)
    b = alpha_dl * h_d.conj().T * (np.sqrt(1 + aux.iota_dl) * aux.tau_dl)
    return (a + a.conj().T) / 2, b


def update_precoder(state, ch, ris, aux, alpha_dl, p_budget, bisection_tol=1e-10, max_iter=100):
    """Maximize the surrogate over P subject to ||P||_F^2 <= p_budget.

    The multiplier mu is 0 when the unconstrained maximizer fits the budget;
    otherwise mu is bracketed by doubling from 1 and refined by bisection.

    Returns:
        Tuple (precoder, mu).
    """
    a, b = _precoder_system(state, ch, ris, aux, alpha_dl)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericalFailureError("precoder system has non-finite entries")
    if not np.any(b):
        return np.zeros_like(b), 0.0

    eigvals, eigvecs = linalg.eigh(a)
    eigvals = np.clip(eigvals, 0.0, None)
    coeffs = eigvecs.conj().T @ b
    weights = np.sum(np.abs(coeffs) ** 2, axis=1)
    floor = EIGEN_FLOOR * eigvals.max()
    # rounding leaves a tiny weight on directions that b does not reach
    reached = weights > WEIGHT_FLOOR * weights.sum()

    def power(mu):
        return float(np.sum(weights / (eigvals + mu) ** 2))

    def precoder(mu):
        return eigvecs @ (coeffs / (eigvals + mu)[:, None])

    singular = eigvals <= floor
    if not np.any(singular & reached):
        unconstrained = eigvecs[:, ~singular] @ (coeffs[~singular] / eigvals[~singular][:, None])
        if np.linalg.norm(unconstrained) ** 2 <= p_budget:
            return unconstrained, 0.0

    hi = 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if power(hi) <= p_budget:
            break
        hi *= 2.0
    else:
        raise NumericalFailureError("could not bracket the power multiplier")

    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if power(mid) > p_budget:
            lo = mid
        else:
            hi = mid
        if hi * abs(power(hi) - p_budget) <= bisection_tol:
            break

    p = precoder(hi)
    if not np.all(np.isfinite(p)):
        raise NumericalFailureError("precoder update produced non-finite values")
    return p, hi


def _combiner_covariance(state, ch, ris):
    _, h_u, _, loop = effective_channels(ch, state.scattering, ris.structural_scattering)
    leak = (ch.h_si + loop) @ state.precoder
    zeta = ch.p_ul_linear * h_u.T @ h_u.conj() + leak @ leak.conj().T
    zeta = zeta + ch.noise_var_linear * np.eye(ch.n_antennas)
    return (zeta + zeta.conj().T) / 2, h_u


def solve_combiner(state, ch, ris, aux):
    """Unnormalized surrogate-maximizing combiner, one column per UL user."""
    n_ul = ch.n_ul_users
    if n_ul == 0:
        return np.zeros((ch.n_antennas, 0), dtype=complex)
    zeta, h_u = _combiner_covariance(state, ch, ris)
    filtered = linalg.solve(zeta, h_u.T, assume_a="her")

    w = np.empty((ch.n_antennas, n_ul), dtype=complex)
    for i in range(n_ul):
        tau = aux.tau_ul[i]
        if tau != 0:
            w[:, i] = np.sqrt(1 + aux.iota_ul[i]) * np.sqrt(ch.p_ul_linear) * filtered[:, i] / tau
        elif np.any(h_u[i]):
            w[:, i] = h_u[i]
        else:
            w[:, i] = 1.0 / np.sqrt(ch.n_antennas)
    if not np.all(np.isfinite(w)):
        raise NumericalFailureError("combiner update produced non-finite values")
    return w


def normalize_combiner(w):
    """Scale W to unit Frobenius norm; returns (W, scale)."""
    scale = float(np.linalg.norm(w))
    if w.size == 0 or scale == 0:
        return w, 1.0
    return w / scale, scale


def update_combiner(state, ch, ris, aux, alpha_dl=None):
    """Normalized combiner; the UL SINR does not depend on the overall scale."""
    return normalize_combiner(solve_combiner(state, ch, ris, aux))[0]


def _unit_columns(h, rng):
    cols = np.array(h, dtype=complex)
    for j in range(cols.shape[1]):
        norm = np.linalg.norm(cols[:, j])
        if norm > 0:
            cols[:, j] /= norm
        else:
            noise = rng.standard_normal(cols.shape[0]) + 1j * rng.standard_normal(cols.shape[0])
            cols[:, j] = noise / np.linalg.norm(noise)
    return cols


def _initial_block(m_g, reciprocal, rng):
    if m_g == 1:
        return np.exp(2j * np.pi * rng.uniform(size=(1, 1)))
    q = unitary_group.rvs(m_g, random_state=rng)
    if not reciprocal:
        return q
    s = q @ q.T
    return (s + s.T) / 2


def initial_state(ch, ris, cfg):
    """Feasible starting point: random block-unitary Phi, matched-filter P and W."""
    rng = make_generator(cfg.rng_seed, STREAM_SOLVER_INIT)
    m = ch.n_ris_elements
    m_g = ris.group_size_for(m)
    phi = linalg.block_diag(*[_initial_block(m_g, ris.reciprocal, rng) for _ in range(m // m_g)])
    phi = np.asarray(phi, dtype=complex)

    h_d, h_u, _, _ = effective_channels(ch, phi, ris.structural_scattering)
    precoder = np.sqrt(cfg.p_dl_linear / ch.n_dl_users) * _unit_columns(h_d.conj().T, rng)
    combiner, _ = normalize_combiner(_unit_columns(h_u.T, rng))
    return TransceiverState(precoder=precoder, combiner=combiner, scattering=phi)


def run_bcd(ch, ris, cfg, opts, state=None):
    """Alternate the closed-form updates until the weighted sum-rate settles.

    Args:
        ch: Channel realization.
        ris: RIS architecture.
        cfg: Scenario providing alpha_dl, the DL power budget and the seed.
        opts: Solver options.
        state: Optional starting point; defaults to ``initial_state``.

    Returns:
        SolverResult whose objective trace holds f_o after every iteration.

    Raises:
        NumericalFailureError: If the objective becomes non-finite.
    """
    alpha = cfg.alpha_dl
    state = initial_state(ch, ris, cfg) if state is None else state.copy()
    objective = weighted_sum_rate(state, ch, ris, alpha)
    objective_trace, trace, pdd_trace = [], [], []
    converged = False
    violation = 0.0
    aux = None
    iteration = 0

    for iteration in range(1, opts.max_bcd_iters + 1):
        aux = update_tau(state, ch, ris, update_iota(state, ch, ris))
        state.precoder, _ = update_precoder(
            state, ch, ris, aux, alpha, cfg.p_dl_linear, opts.bisection_tol, opts.bisection_max_iters
        )
        state.combiner, scale = normalize_combiner(solve_combiner(state, ch, ris, aux))
        aux.tau_ul = aux.tau_ul * scale

        pdd = run_pdd(state, ch, ris, aux, opts.pdd, alpha)
        candidate = TransceiverState(state.precoder, state.combiner, pdd.scattering)
        if eval_f_tau(candidate, ch, ris, aux, alpha) >= eval_f_tau(state, ch, ris, aux, alpha) - ASCENT_SLACK:
            state = candidate
        else:
            logger.debug("iteration %d: scattering update rejected, surrogate would decrease", iteration)
        violation = pdd.violation
        if opts.record_trace:
            pdd_trace.extend(pdd.trace)

        previous, objective = objective, weighted_sum_rate(state, ch, ris, alpha)
        if not np.isfinite(objective):
            raise NumericalFailureError("weighted sum-rate is not finite", iteration=iteration)
        dl_rate, ul_rate = rates(state, ch, ris)
        objective_trace.append(objective)
        if opts.record_trace:
            trace.append(BcdTraceRow(iteration, objective, dl_rate, ul_rate, violation))
        logger.debug(
            "iteration %d: f_o=%.6f dl=%.6f ul=%.6f violation=%.3e", iteration, objective, dl_rate, ul_rate, violation
        )
        if abs(objective - previous) <= opts.bcd_rel_tol * max(abs(previous), np.finfo(float).tiny):
            converged = True
            break

    dl_rate, ul_rate = rates(state, ch, ris)
    logger.info("BCD finished: converged=%s iterations=%d f_o=%.6f", converged, iteration, objective)
    return SolverResult(
        final_state=state,
        aux=aux,
        objective_trace=objective_trace,
        dl_rate=dl_rate,
        ul_rate=ul_rate,
        iters_used=iteration,
        converged=converged,
        pdd_violation=violation,
        trace=trace,
        pdd_trace=pdd_trace,
    )
