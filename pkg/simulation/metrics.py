"""
Interference, SINR, weighted sum-rate and beampattern evaluation.
"""

import logging
from dataclasses import dataclass

import numpy as np

from models.errors import InvalidArgumentError
from models.state import BeamKind

from .channel_model import effective_channels, scattering_operator, steering_matrix

logger = logging.getLogger(__name__)


@dataclass
class LinkBudget:
    """Per-user signal amplitudes and interference powers for one state.

    ``ul_signal`` already carries the sqrt(P_u) factor, so the UL signal
    power is ``abs(ul_signal) ** 2``.
    """

    dl_signal: np.ndarray
    dl_interference: np.ndarray
    dl_noise: np.ndarray
    ul_signal: np.ndarray
    ul_interference: np.ndarray
    ul_noise: np.ndarray

    @property
    def dl_total(self):
        return np.abs(self.dl_signal) ** 2 + self.dl_interference + self.dl_noise

    @property
    def ul_total(self):
        return np.abs(self.ul_signal) ** 2 + self.ul_interference + self.ul_noise


def link_budget(state, ch, ris):
    h_d, h_u, h_ud, loop = effective_channels(ch, state.scattering, ris.structural_scattering)
    p, w = state.precoder, state.combiner
    p_ul, noise = ch.p_ul_linear, ch.noise_var_linear

    # cross[k, j] = h_d,k^T p_j
    cross = h_d @ p
    dl_signal = np.diag(cross).copy()
    off_dl = 1.0 - np.eye(*cross.shape)
    dl_interference = np.sum(off_dl * np.abs(cross) ** 2, axis=1) + p_ul * np.sum(np.abs(h_ud) ** 2, axis=0)

    # ul_cross[i, q] = w_i^H h_u,q,BS ; si[i, k] = w_i^H (H_SI + L) p_k
    ul_cross = w.conj().T @ h_u.T
    si = w.conj().T @ (ch.h_si + loop) @ p
    ul_amp = np.diag(ul_cross).copy()
    off_ul = 1.0 - np.eye(*ul_cross.shape)
    ul_interference = p_ul * np.sum(off_ul * np.abs(ul_cross) ** 2, axis=1) + np.sum(np.abs(si) ** 2, axis=1)

    return LinkBudget(
        dl_signal=dl_signal,
        dl_interference=dl_interference,
        dl_noise=np.full(len(dl_signal), noise),
        ul_signal=np.sqrt(p_ul) * ul_amp,
        ul_interference=ul_interference,
        ul_noise=noise * np.sum(np.abs(w) ** 2, axis=0),
    )


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def sinr_vectors(state, ch, ris):
    """DL and UL SINRs of every user as two arrays."""
    budget = link_budget(state, ch, ris)
    gamma_dl = _ratio(np.abs(budget.dl_signal) ** 2, budget.dl_interference + budget.dl_noise)
    gamma_ul = _ratio(np.abs(budget.ul_signal) ** 2, budget.ul_interference + budget.ul_noise)
    return gamma_dl, gamma_ul


def dl_interference(k, state, ch, ris):
    return float(link_budget(state, ch, ris).dl_interference[k])


def ul_interference(i, state, ch, ris):
    return float(link_budget(state, ch, ris).ul_interference[i])


def dl_sinr(k, state, ch, ris):
    return float(sinr_vectors(state, ch, ris)[0][k])


def ul_sinr(i, state, ch, ris):
    return float(sinr_vectors(state, ch, ris)[1][i])


def rates(state, ch, ris):
    """Unweighted DL and UL sum-rates in bits/s/Hz."""
    gamma_dl, gamma_ul = sinr_vectors(state, ch, ris)
    return float(np.sum(np.log2(1 + gamma_dl))), float(np.sum(np.log2(1 + gamma_ul)))


def weighted_sum_rate(state, ch, ris, alpha_dl):
    dl_rate, ul_rate = rates(state, ch, ris)
    return alpha_dl * dl_rate + (1 - alpha_dl) * ul_rate


def _unit(vector):
    return vector / np.linalg.norm(vector)


def beampattern(state, ch, kind, theta_grid_deg, structural, k_or_i=0):
    """Received power of one link as a function of the probing angle.

    Args:
        state: Transceiver state whose scattering matrix is evaluated.
        ch: Channel realization.
        kind: Which of the four patterns to evaluate.
        theta_grid_deg: Probing angles in degrees.
        structural: Replace Phi by Phi - I when True.
        k_or_i: DL user index for DL patterns, UL user index for UL patterns.

    Returns:
        Array of non-negative powers, one per grid angle.
    """
    grid = np.atleast_1d(np.asarray(theta_grid_deg, dtype=float))
    if grid.size == 0:
        raise InvalidArgumentError("beampattern grid is empty")
    kind = BeamKind(kind)
    theta = scattering_operator(ch, state.scattering, structural)
    steer = steering_matrix(grid, ch.n_ris_elements)
    g = ch.g_bs_ris
    fallback = g[:, 0]

    if kind is BeamKind.DL_IMPINGING:
        response = ch.h_ref_dl[k_or_i] @ theta @ steer
    elif kind is BeamKind.DL_REFLECTED:
        g_dl = g @ _unit(state.precoder[:, k_or_i]) if np.any(state.precoder[:, k_or_i]) else fallback
        response = steer.T @ theta @ g_dl
    elif kind is BeamKind.UL_IMPINGING:
        w = state.combiner[:, k_or_i]
        g_ul = g @ _unit(w.conj()) if np.any(w) else fallback
        response = g_ul @ theta @ steer
    else:
        response = steer.T @ theta @ ch.h_ref_ul[k_or_i]
    return np.abs(response) ** 2


def normalize_beampatterns(patterns):
    """Scale the four patterns by their common maximum."""
    arrays = [np.asarray(p, dtype=float) for p in patterns]
    peak = max((float(np.max(a)) for a in arrays if a.size), default=0.0)
    if peak <= 0:
        return [np.zeros_like(a) for a in arrays]
    return [a / peak for a in arrays]


def beampattern_table(state, ch, ris, theta_grid_deg, k=0, i=0):
    """Normalized DL/UL impinging and reflected patterns keyed by column name."""
    structural = ris.structural_scattering
    raw = [
        beampattern(state, ch, BeamKind.DL_IMPINGING, theta_grid_deg, structural, k),
        beampattern(state, ch, BeamKind.DL_REFLECTED, theta_grid_deg, structural, k),
        beampattern(state, ch, BeamKind.UL_IMPINGING, theta_grid_deg, structural, i),
        beampattern(state, ch, BeamKind.UL_REFLECTED, theta_grid_deg, structural, i),
    ]
    normalized = normalize_beampatterns(raw)
    table = {"theta_deg": np.asarray(theta_grid_deg, dtype=float)}
    for kind, values in zip(BeamKind, normalized):
        table[kind.value] = values
    return table
