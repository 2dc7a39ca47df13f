"""
Lagrangian-dual and quadratic transforms of the weighted sum-rate.

Both surrogates are evaluated in natural log, where the transforms are exact,
and divided by ln 2 so that they compare directly with rates in bits/s/Hz.
"""

import logging

import numpy as np

from models.state import AuxVars
from simulation.metrics import link_budget, sinr_vectors

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)


def update_iota(state, ch, ris):
    """Set iota to the current SINRs; tau is left at zero."""
    gamma_dl, gamma_ul = sinr_vectors(state, ch, ris)
    aux = AuxVars.zeros(len(gamma_dl), len(gamma_ul))
    aux.iota_dl = gamma_dl
    aux.iota_ul = gamma_ul
    return aux


def _safe_divide(num, den):
    """num / den where den > 0, else 0; real numerators give real results."""
    num = np.asarray(num)
    den = np.real(np.asarray(den))
    out = np.zeros(np.broadcast(num, den).shape, dtype=np.result_type(num, float))
    np.divide(num, den, out=out, where=den > 0)
    return out


def update_tau(state, ch, ris, iota):
    """Closed-form tau for the given iota; returns a new AuxVars carrying both."""
    budget = link_budget(state, ch, ris)
    tau_dl = np.sqrt(1 + iota.iota_dl) * _safe_divide(budget.dl_signal, budget.dl_total)
    tau_ul = np.sqrt(1 + iota.iota_ul) * _safe_divide(budget.ul_signal, budget.ul_total)
    return AuxVars(
        iota_dl=np.array(iota.iota_dl, dtype=float),
        iota_ul=np.array(iota.iota_ul, dtype=float),
        tau_dl=tau_dl,
        tau_ul=tau_ul,
    )


def _dual_terms(iota):
    return np.log1p(iota) - iota


def eval_f_iota(state, ch, ris, iota, alpha_dl):
    budget = link_budget(state, ch, ris)
    dl = _dual_terms(iota.iota_dl) + (1 + iota.iota_dl) * np.real(
        _safe_divide(np.abs(budget.dl_signal) ** 2, budget.dl_total)
    )
    ul = _dual_terms(iota.iota_ul) + (1 + iota.iota_ul) * np.real(
        _safe_divide(np.abs(budget.ul_signal) ** 2, budget.ul_total)
    )
    return float((alpha_dl * np.sum(dl) + (1 - alpha_dl) * np.sum(ul)) / LN2)


def f_tau_nats(state, ch, ris, aux, alpha_dl):
    """Quadratic-transform surrogate in nats."""
    budget = link_budget(state, ch, ris)
    dl = (
        _dual_terms(aux.iota_dl)
        + 2 * np.sqrt(1 + aux.iota_dl) * np.real(aux.tau_dl.conj() * budget.dl_signal)
        - np.abs(aux.tau_dl) ** 2 * budget.dl_total
    )
    ul = (
        _dual_terms(aux.iota_ul)
        + 2 * np.sqrt(1 + aux.iota_ul) * np.real(aux.tau_ul.conj() * budget.ul_signal)
        - np.abs(aux.tau_ul) ** 2 * budget.ul_total
    )
    return float(alpha_dl * np.sum(dl) + (1 - alpha_dl) * np.sum(ul))


def eval_f_tau(state, ch, ris, aux, alpha_dl):
    return f_tau_nats(state, ch, ris, aux, alpha_dl) / LN2
