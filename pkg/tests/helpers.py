"""
Shared builders for the test suite.
"""

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from models.config import ScenarioConfig
from models.state import AuxVars, ChannelSet, TransceiverState


def randn_c(rng, *shape):
    """Circularly-symmetric unit-variance complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channel_set(rng, m=4, n=2, k=2, i=2, blocked=False, noise=1.0, p_ul=1.0, p_dl=1.0, si_scale=0.3):
    """Unit-scale i.i.d. channels, so every SINR is of order one."""
    zeros = np.zeros
    return ChannelSet(
        g_bs_ris=randn_c(rng, m, n),
        h_ref_dl=randn_c(rng, k, m) * 0.5,
        h_ref_ul=randn_c(rng, i, m) * 0.5,
        h_dir_dl=zeros((k, n), dtype=complex) if blocked else randn_c(rng, k, n) * 0.3,
        h_dir_ul_bs=zeros((i, n), dtype=complex) if blocked else randn_c(rng, i, n) * 0.3,
        h_dir_ul_dl=zeros((i, k), dtype=complex) if blocked else randn_c(rng, i, k) * 0.3,
        h_si=randn_c(rng, n, n) * si_scale,
        noise_var_linear=noise,
        p_ul_linear=p_ul,
        p_dl_linear=p_dl,
    )


def random_block_unitary(rng, m, m_g, reciprocal=False):
    blocks = []
    for _ in range(m // m_g):
        if m_g == 1:
            blocks.append(np.exp(2j * np.pi * rng.uniform(size=(1, 1))))
            continue
        q = unitary_group.rvs(m_g, random_state=rng)
        if reciprocal:
            s = q @ q.T
            q = (s + s.T) / 2
        blocks.append(q)
    return np.asarray(linalg.block_diag(*blocks), dtype=complex)


def random_state(rng, ch, m_g=None, reciprocal=False):
    """Random feasible state: full-power precoder, unit-norm combiner, block-unitary Phi."""
    m, n = ch.n_ris_elements, ch.n_antennas
    m_g = m if m_g is None else m_g
    p = randn_c(rng, n, ch.n_dl_users)
    p *= np.sqrt(ch.p_dl_linear) / np.linalg.norm(p)
    w = randn_c(rng, n, ch.n_ul_users)
    w /= np.linalg.norm(w)
    return TransceiverState(precoder=p, combiner=w, scattering=random_block_unitary(rng, m, m_g, reciprocal))


def random_aux(rng, n_dl, n_ul):
    return AuxVars(
        iota_dl=rng.uniform(0.1, 2.0, n_dl),
        iota_ul=rng.uniform(0.1, 2.0, n_ul),
        tau_dl=randn_c(rng, n_dl),
        tau_ul=randn_c(rng, n_ul),
    )


def small_scenario(**changes):
    """Default geometry shrunk to M = 4 for fast solver runs."""
    values = dict(n_ris_elements=4, direct_links_blocked=True)
    values.update(changes)
    return ScenarioConfig(**values)
