"""
Array-valued state shared by the simulator and the solvers.

Vectors of per-user channels are stored row-wise: ``h_ref_dl[k]`` is the
length-M vector h_ref,d,k and ``h_dir_ul_dl[i, k]`` the scalar h_dir,u,i,k.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class BeamKind(str, Enum):
    DL_IMPINGING = "dl_impinging"
    DL_REFLECTED = "dl_reflected"
    UL_IMPINGING = "ul_impinging"
    UL_REFLECTED = "ul_reflected"


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization; powers are linear mW."""

    g_bs_ris: np.ndarray  # M x N
    h_ref_dl: np.ndarray  # K x M
    h_ref_ul: np.ndarray  # I x M
    h_dir_dl: np.ndarray  # K x N
    h_dir_ul_bs: np.ndarray  # I x N
    h_dir_ul_dl: np.ndarray  # I x K
    h_si: np.ndarray  # N x N
    noise_var_linear: float
    p_ul_linear: float
    p_dl_linear: float = 1.0

    @property
    def n_antennas(self):
        return self.g_bs_ris.shape[1]

    @property
    def n_ris_elements(self):
        return self.g_bs_ris.shape[0]

    @property
    def n_dl_users(self):
        return self.h_ref_dl.shape[0]

    @property
    def n_ul_users(self):
        return self.h_ref_ul.shape[0]

    def with_channels(self, **arrays):
        return replace(self, **arrays)


@dataclass
class TransceiverState:
    """Precoder P (N x K), combiner W (N x I) and scattering matrix Phi (M x M)."""

    precoder: np.ndarray
    combiner: np.ndarray
    scattering: np.ndarray

    def copy(self):
        return TransceiverState(self.precoder.copy(), self.combiner.copy(), self.scattering.copy())


@dataclass
class AuxVars:
    """Auxiliary variables of the Lagrangian-dual (iota) and quadratic (tau) transforms."""

    iota_dl: np.ndarray
    iota_ul: np.ndarray
    tau_dl: np.ndarray
    tau_ul: np.ndarray

    @classmethod
    def zeros(cls, n_dl, n_ul):
        return cls(
            iota_dl=np.zeros(n_dl),
            iota_ul=np.zeros(n_ul),
            tau_dl=np.zeros(n_dl, dtype=complex),
            tau_ul=np.zeros(n_ul, dtype=complex),
        )

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in (self.iota_dl, self.iota_ul, self.tau_dl, self.tau_ul))


@dataclass
class BcdTraceRow:
    iteration: int
    objective: float
    dl_rate: float
    ul_rate: float
    pdd_violation: float


@dataclass
class SolverResult:
    final_state: TransceiverState
    aux: AuxVars
    objective_trace: list
    dl_rate: float
    ul_rate: float
    iters_used: int
    converged: bool
    pdd_violation: float = 0.0
    trace: list = field(default_factory=list)
    pdd_trace: list = field(default_factory=list)

    @property
    def sum_rate(self):
        return self.dl_rate + self.ul_rate


RECORD_COLUMNS = (
    "kind",
    "variant",
    "sweep_value",
    "seed",
    "dl_rate",
    "ul_rate",
    "sum_rate",
    "objective",
    "iters",
    "converged",
    "pdd_violation",
    "failed",
)


@dataclass
class ExperimentRecord:
    """Outcome of one (sweep value, seed, RIS variant) solve."""

    kind: str
    variant: str
    sweep_value: float | None
    seed: int
    dl_rate: float = 0.0
    ul_rate: float = 0.0
    sum_rate: float = 0.0
    objective: float = 0.0
    iters: int = 0
    converged: bool = False
    pdd_violation: float = 0.0
    failed: bool = False
    error: str = ""
    extras: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    spec: dict
    records: list
    aggregates: list = field(default_factory=list)
