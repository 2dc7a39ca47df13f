"""
Channel generation and effective-channel composition.

The RIS sits at the origin; the BS and the users lie on circles of radius
``d_bs_ris_m`` and ``d_ris_user_m`` around it, at the configured angles.
Every channel block draws from its own Philox stream keyed by the block and
user indices, so adding users never perturbs the draws of existing ones.
"""

import logging

import numpy as np

from models.errors import InvalidArgumentError
from models.state import ChannelSet

logger = logging.getLogger(__name__)

REFERENCE_DISTANCE_M = 1.0
PURE_LOS_KAPPA = 1e12

# spawn-key prefixes of the per-block random streams
STREAM_G = 0
STREAM_REF_DL = 1
STREAM_REF_UL = 2
STREAM_DIR_DL = 3
STREAM_DIR_UL_BS = 4
STREAM_DIR_UL_DL = 5
STREAM_SI = 6
STREAM_SOLVER_INIT = 7


def make_generator(seed, *key):
    """Counter-based generator for the stream ``key`` of realization ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def steering_vector(theta_deg, n):
    """Unit-norm half-wavelength ULA response at angle ``theta_deg``.

    Args:
        theta_deg: Angle in degrees, within [0, 180].
        n: Number of array elements.

    Returns:
        Complex vector of length ``n`` with entries exp(j*pi*m*cos(theta))/sqrt(n).
    """
    if n < 1:
        raise InvalidArgumentError(f"array size must be positive, got {n}")
    if not 0.0 <= theta_deg <= 180.0:
        raise InvalidArgumentError(f"angle {theta_deg} deg is outside [0, 180]")
    m = np.arange(n)
    return np.exp(1j * np.pi * m * np.cos(np.deg2rad(theta_deg))) / np.sqrt(n)


def steering_matrix(theta_grid_deg, n):
    """Steering vectors for a grid of angles, one per column."""
    return np.column_stack([steering_vector(theta, n) for theta in theta_grid_deg])


def pathloss_linear(d_m, exponent, zeta0_db):
    if d_m <= 0:
        raise InvalidArgumentError(f"distance must be positive, got {d_m}")
    return 10.0 ** (zeta0_db / 10.0) * (d_m / REFERENCE_DISTANCE_M) ** (-exponent)


def rician_sample(los, kappa, pathloss_gain, rng):
    """Draw a Rician-faded channel around the line-of-sight component ``los``."""
    los = np.asarray(los, dtype=complex)
    if kappa < 0:
        raise InvalidArgumentError(f"Rician factor must be non-negative, got {kappa}")
    if pathloss_gain < 0:
        raise InvalidArgumentError(f"pathloss gain must be non-negative, got {pathloss_gain}")
    if not np.all(np.isfinite(los)):
        raise InvalidArgumentError("line-of-sight component has non-finite entries")

    scattered = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / np.sqrt(2)
    los_weight = np.sqrt(kappa / (1.0 + kappa))
    nlos_weight = np.sqrt(1.0 / (1.0 + kappa))
    return np.sqrt(pathloss_gain) * (los_weight * los + nlos_weight * scattered)


def _position(distance, angle_deg):
    angle = np.deg2rad(angle_deg)
    return distance * np.array([np.cos(angle), np.sin(angle)])


def direct_distance(cfg, user_angle_deg):
    """BS-user distance by the law of cosines, clamped to the reference distance."""
    gap = np.deg2rad(cfg.angle_bs_deg - user_angle_deg)
    d2 = cfg.d_bs_ris_m**2 + cfg.d_ris_user_m**2 - 2 * cfg.d_bs_ris_m * cfg.d_ris_user_m * np.cos(gap)
    return max(float(np.sqrt(max(d2, 0.0))), REFERENCE_DISTANCE_M)


def user_distance(cfg, angle_a_deg, angle_b_deg):
    gap = np.deg2rad(angle_a_deg - angle_b_deg)
    d = 2 * cfg.d_ris_user_m * abs(np.sin(gap / 2))
    return max(float(d), REFERENCE_DISTANCE_M)


def bs_view_angle(cfg, user_angle_deg):
    """Departure angle at the BS array towards a user.

    The BS array points at the RIS along ``cfg.departure_deg``; the user is
    offset from that direction by the angle between RIS and user seen from the BS.
    """
    bs = _position(cfg.d_bs_ris_m, cfg.angle_bs_deg)
    user = _position(cfg.d_ris_user_m, user_angle_deg)
    to_ris = -bs
    to_user = user - bs
    offset = np.arctan2(to_user[1], to_user[0]) - np.arctan2(to_ris[1], to_ris[0])
    view = np.deg2rad(cfg.departure_deg) + offset
    # fold back onto [0, 180], the ULA only resolves cos(theta)
    return float(np.rad2deg(np.arccos(np.clip(np.cos(view), -1.0, 1.0))))


def _reflected_channels(cfg, m):
    gain = pathloss_linear(cfg.d_ris_user_m, cfg.exp_reflected, cfg.zeta0_db)
    kappa = cfg.rician_k_reflected
    seed = cfg.rng_seed
    h_ref_dl = np.array(
        [
            rician_sample(np.sqrt(m) * steering_vector(theta, m), kappa, gain, make_generator(seed, STREAM_REF_DL, k))
            for k, theta in enumerate(cfg.angles_dl_deg)
        ],
        dtype=complex,
    ).reshape(cfg.n_dl_users, m)
    h_ref_ul = np.array(
        [
            rician_sample(np.sqrt(m) * steering_vector(theta, m), kappa, gain, make_generator(seed, STREAM_REF_UL, i))
            for i, theta in enumerate(cfg.angles_ul_deg)
        ],
        dtype=complex,
    ).reshape(cfg.n_ul_users, m)
    return h_ref_dl, h_ref_ul


def _direct_channels(cfg):
    n = cfg.n_antennas
    n_dl, n_ul = cfg.n_dl_users, cfg.n_ul_users
    if cfg.direct_links_blocked:
        return (
            np.zeros((n_dl, n), dtype=complex),
            np.zeros((n_ul, n), dtype=complex),
            np.zeros((n_ul, n_dl), dtype=complex),
        )

    seed, kappa = cfg.rng_seed, cfg.rician_k_direct
    h_dir_dl = np.zeros((n_dl, n), dtype=complex)
    for k, theta in enumerate(cfg.angles_dl_deg):
        gain = pathloss_linear(direct_distance(cfg, theta), cfg.exp_direct, cfg.zeta0_db)
        los = np.sqrt(n) * steering_vector(bs_view_angle(cfg, theta), n)
        h_dir_dl[k] = rician_sample(los, kappa, gain, make_generator(seed, STREAM_DIR_DL, k))

    h_dir_ul_bs = np.zeros((n_ul, n), dtype=complex)
    for i, theta in enumerate(cfg.angles_ul_deg):
        gain = pathloss_linear(direct_distance(cfg, theta), cfg.exp_direct, cfg.zeta0_db)
        los = np.sqrt(n) * steering_vector(bs_view_angle(cfg, theta), n)
        h_dir_ul_bs[i] = rician_sample(los, kappa, gain, make_generator(seed, STREAM_DIR_UL_BS, i))

    h_dir_ul_dl = np.zeros((n_ul, n_dl), dtype=complex)
    for i, theta_u in enumerate(cfg.angles_ul_deg):
        for k, theta_d in enumerate(cfg.angles_dl_deg):
            gain = pathloss_linear(user_distance(cfg, theta_u, theta_d), cfg.exp_direct, cfg.zeta0_db)
            sample = rician_sample(np.ones(1), kappa, gain, make_generator(seed, STREAM_DIR_UL_DL, i, k))
            h_dir_ul_dl[i, k] = sample[0]
    return h_dir_dl, h_dir_ul_bs, h_dir_ul_dl


def generate_channel_set(cfg, ris):
    """Sample every channel of one realization of ``cfg``.

    Line-of-sight components have unit-modulus entries, so the Rician factor is
    the per-entry power ratio of the LoS and scattered parts.

    Args:
        cfg: Scenario geometry, powers and seed.
        ris: RIS architecture; only checked for compatibility with the element count.

    Returns:
        ChannelSet with all powers in linear mW.
    """
    m, n = cfg.n_ris_elements, cfg.n_antennas
    ris.group_size_for(m)

    los_g = np.sqrt(m * n) * np.outer(steering_vector(cfg.angle_bs_deg, m), steering_vector(cfg.departure_deg, n))
    gain_g = pathloss_linear(cfg.d_bs_ris_m, cfg.exp_reflected, cfg.zeta0_db)
    g_bs_ris = rician_sample(los_g, cfg.rician_k_reflected, gain_g, make_generator(cfg.rng_seed, STREAM_G))

    h_ref_dl, h_ref_ul = _reflected_channels(cfg, m)
    h_dir_dl, h_dir_ul_bs, h_dir_ul_dl = _direct_channels(cfg)

    si_rng = make_generator(cfg.rng_seed, STREAM_SI)
    h_si = np.sqrt(cfg.si_variance_linear / 2) * (
        si_rng.standard_normal((n, n)) + 1j * si_rng.standard_normal((n, n))
    )

    logger.debug(
        "channels drawn: seed=%d M=%d N=%d K=%d I=%d blocked=%s",
        cfg.rng_seed, m, n, cfg.n_dl_users, cfg.n_ul_users, cfg.direct_links_blocked,
    )
    return ChannelSet(
        g_bs_ris=g_bs_ris,
        h_ref_dl=h_ref_dl,
        h_ref_ul=h_ref_ul,
        h_dir_dl=h_dir_dl,
        h_dir_ul_bs=h_dir_ul_bs,
        h_dir_ul_dl=h_dir_ul_dl,
        h_si=h_si,
        noise_var_linear=cfg.noise_linear,
        p_ul_linear=cfg.p_ul_linear,
        p_dl_linear=cfg.p_dl_linear,
    )


def scattering_operator(ch, phi, structural):
    """Phi - I with structural scattering, Phi otherwise."""
    phi = np.asarray(phi, dtype=complex)
    m = ch.n_ris_elements
    if phi.shape != (m, m):
        raise InvalidArgumentError(f"scattering matrix must be {m}x{m}, got {phi.shape}")
    return phi - np.eye(m) if structural else phi


def _check_index(index, bound, what):
    if not 0 <= index < bound:
        raise InvalidArgumentError(f"{what} index {index} out of range [0, {bound})")


def effective_dl_channel(ch, phi, k, structural):
    _check_index(k, ch.n_dl_users, "DL user")
    theta = scattering_operator(ch, phi, structural)
    return ch.h_dir_dl[k] + ch.h_ref_dl[k] @ theta @ ch.g_bs_ris


def effective_ul_channel(ch, phi, i, structural):
    _check_index(i, ch.n_ul_users, "UL user")
    theta = scattering_operator(ch, phi, structural)
    return ch.h_dir_ul_bs[i] + ch.g_bs_ris.T @ theta @ ch.h_ref_ul[i]


def ul_to_dl_channel(ch, phi, i, k, structural):
    _check_index(i, ch.n_ul_users, "UL user")
    _check_index(k, ch.n_dl_users, "DL user")
    theta = scattering_operator(ch, phi, structural)
    return complex(ch.h_dir_ul_dl[i, k] + ch.h_ref_dl[k] @ theta @ ch.h_ref_ul[i])


def loop_channel(ch, phi, structural):
    theta = scattering_operator(ch, phi, structural)
    return ch.g_bs_ris.T @ theta @ ch.g_bs_ris


def effective_channels(ch, phi, structural):
    """All effective channels at once.

    Returns:
        Tuple (H_d, H_u, H_ud, L): DL rows h_d,k^T (K x N), UL rows h_u,i,BS (I x N),
        UL-to-DL scalars h_u,i,k (I x K) and the loop channel (N x N).
    """
    theta = scattering_operator(ch, phi, structural)
    g = ch.g_bs_ris
    h_d = ch.h_dir_dl + ch.h_ref_dl @ theta @ g
    h_u = ch.h_dir_ul_bs + ch.h_ref_ul @ theta.T @ g
    h_ud = ch.h_dir_ul_dl + ch.h_ref_ul @ theta.T @ ch.h_ref_dl.T
    return h_d, h_u, h_ud, g.T @ theta @ g
