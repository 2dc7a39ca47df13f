"""
Configuration models for scenarios, RIS architectures, solvers and experiments.

All dB/dBm quantities are stored as given and converted to linear milliwatts
through the ``*_linear`` properties, so the rest of the package only ever
sees linear units.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import InvalidArgumentError

Architecture = Literal["single", "group", "full"]
Variant = Literal["bd_nonreciprocal", "bd_reciprocal", "d_ris"]
ExperimentKind = Literal[
    "convergence",
    "sweep_elements",
    "sweep_ul_angle",
    "rate_region",
    "group_size",
    "si_sweep",
    "beampattern",
    "bound_check",
    "mu_rate_region",
]

ALL_VARIANTS = ("bd_nonreciprocal", "bd_reciprocal", "d_ris")
SWEEP_KINDS = frozenset(
    {"sweep_elements", "sweep_ul_angle", "rate_region", "group_size", "si_sweep", "mu_rate_region"}
)


def db_to_linear(value_db):
    return 10.0 ** (value_db / 10.0)


def _check_angle(value):
    if not 0.0 <= value <= 180.0:
        raise InvalidArgumentError(f"angle {value} deg is outside [0, 180]")
    return value


class ScenarioConfig(BaseModel):
    """Geometry, user counts, powers and fading parameters of one scenario."""

    model_config = ConfigDict(extra="forbid")

    n_antennas: int = Field(1, ge=1)
    n_dl_users: int = Field(1, ge=1)
    # zero UL users is allowed for DL-only runs
    n_ul_users: int = Field(1, ge=0)
    n_ris_elements: int = Field(16, ge=1)
    angle_bs_deg: float = 30.0
    angles_dl_deg: tuple[float, ...] = (90.0,)
    angles_ul_deg: tuple[float, ...] = (60.0,)
    bs_departure_deg: Optional[float] = None
    d_bs_ris_m: float = Field(30.0, gt=0)
    d_ris_user_m: float = Field(5.0, gt=0)
    zeta0_db: float = -30.0
    exp_reflected: float = 2.2
    exp_direct: float = 5.0
    rician_k_reflected: float = Field(10.0, ge=0)
    rician_k_direct: float = Field(0.0, ge=0)
    p_dl_dbm: float = 20.0
    p_ul_dbm: float = 20.0
    noise_dbm: float = -80.0
    si_power_db: float = -110.0
    alpha_dl: float = Field(0.5, ge=0, le=1)
    direct_links_blocked: bool = False
    rng_seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("angle_bs_deg")
    @classmethod
    def _bs_angle_in_range(cls, value):
        return _check_angle(value)

    @field_validator("bs_departure_deg")
    @classmethod
    def _departure_in_range(cls, value):
        return value if value is None else _check_angle(value)

    @field_validator("angles_dl_deg", "angles_ul_deg")
    @classmethod
    def _user_angles_in_range(cls, values):
        return tuple(_check_angle(v) for v in values)

    @model_validator(mode="after")
    def _match_angles_to_users(self):
        # a single angle is shared by every user of that direction
        for field, count in (("angles_dl_deg", self.n_dl_users), ("angles_ul_deg", self.n_ul_users)):
            angles = getattr(self, field)
            if len(angles) == 1 and count != 1:
                setattr(self, field, angles * count)
            elif len(angles) != count:
                raise InvalidArgumentError(f"{field} has {len(angles)} entries, expected {count}")
        return self

    @property
    def departure_deg(self):
        return self.angle_bs_deg if self.bs_departure_deg is None else self.bs_departure_deg

    @property
    def alpha_ul(self):
        return 1.0 - self.alpha_dl

    @property
    def p_dl_linear(self):
        return db_to_linear(self.p_dl_dbm)

    @property
    def p_ul_linear(self):
        return db_to_linear(self.p_ul_dbm)

    @property
    def noise_linear(self):
        return db_to_linear(self.noise_dbm)

    @property
    def si_variance_linear(self):
        return db_to_linear(self.si_power_db)

    def evolve(self, **changes):
        """Return a re-validated copy with ``changes`` applied."""
        data = self.model_dump()
        data.update(changes)
        return type(self).model_validate(data)


class RisConfig(BaseModel):
    """RIS circuit architecture: grouping, reciprocity and structural scattering."""

    model_config = ConfigDict(extra="forbid")

    architecture: Architecture = "full"
    group_size: Optional[int] = Field(None, ge=1)
    reciprocal: bool = False
    structural_scattering: bool = True

    @model_validator(mode="after")
    def _group_size_matches_architecture(self):
        if self.architecture == "single" and self.group_size not in (None, 1):
            raise InvalidArgumentError("single-connected RIS requires group_size 1")
        if self.architecture == "group" and self.group_size is None:
            raise InvalidArgumentError("group-connected RIS requires group_size")
        return self

    def group_size_for(self, n_elements):
        """Resolve M_g for a surface of ``n_elements`` elements.

        Raises:
            InvalidArgumentError: If the group size does not divide ``n_elements``
                or contradicts the fully-connected architecture.
        """
        if self.architecture == "single":
            return 1
        if self.architecture == "full":
            if self.group_size not in (None, n_elements):
                raise InvalidArgumentError(
                    f"fully-connected RIS needs group_size {n_elements}, got {self.group_size}"
                )
            return n_elements
        if n_elements % self.group_size:
            raise InvalidArgumentError(
                f"group_size {self.group_size} does not divide {n_elements} elements"
            )
        return self.group_size

    def n_groups(self, n_elements):
        return n_elements // self.group_size_for(n_elements)

    def evolve(self, **changes):
        data = self.model_dump()
        data.update(changes)
        return type(self).model_validate(data)


class PddOptions(BaseModel):
    """Penalty dual decomposition settings for the scattering-matrix block."""

    model_config = ConfigDict(extra="forbid")

    c_penalty: float = Field(0.8, gt=0, lt=1)
    rho_init: float = Field(1.0, gt=0)
    inner_tol: float = Field(1e-5, gt=0)
    inner_max: int = Field(50, ge=1)
    outer_eps: float = Field(1e-4, gt=0)
    dual_switch_eps0: float = Field(0.1, gt=0)
    dual_switch_decay: float = Field(0.9, gt=0, lt=1)
    outer_max: int = Field(100, ge=1)
    # block refinement and sweeps stop once Phi moves less than this (Frobenius)
    stationarity_tol: float = Field(1e-5, gt=0)
    refine_max: int = Field(200, ge=0)
    max_sweeps: int = Field(50, ge=1)


class SolverOptions(BaseModel):
    """Outer BCD loop settings."""

    model_config = ConfigDict(extra="forbid")

    max_bcd_iters: int = Field(100, ge=1)
    bcd_rel_tol: float = Field(1e-4, gt=0)
    bisection_tol: float = Field(1e-10, gt=0)
    bisection_max_iters: int = Field(100, ge=1)
    pdd: PddOptions = Field(default_factory=PddOptions)
    record_trace: bool = True


class ExperimentSpec(BaseModel):
    """One experiment family run over a sweep grid and a seed ladder."""

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    ris: RisConfig = Field(default_factory=RisConfig)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    sweep_values: tuple[float, ...] = ()
    n_seeds: int = Field(1, ge=1)
    variants: tuple[Variant, ...] = ALL_VARIANTS
    output_path: str = "results/experiment.json"
    beampattern_step_deg: float = Field(0.5, gt=0, le=180)
    parallelism: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _sweep_present(self):
        if self.kind in SWEEP_KINDS and not self.sweep_values:
            raise InvalidArgumentError(f"experiment kind {self.kind!r} needs non-empty sweep_values")
        if not self.variants:
            raise InvalidArgumentError("at least one RIS variant is required")
        return self

    @property
    def is_sweep(self):
        return self.kind in SWEEP_KINDS
