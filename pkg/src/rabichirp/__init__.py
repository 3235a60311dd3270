"""Chirped-pulse design and three-frame propagation for two-level systems
with field-induced dipole moments."""

__version__ = "0.1.0"

from .errors import (
    AmbiguousTauError,
    ConfigError,
    DegenerateCouplingError,
    DesignFailureError,
    DomainError,
    IntegrationError,
    LevelCrossingError,
    OrientationError,
    RabiChirpError,
    ValidationError,
)
from .timefun import TimeFunction
from .model import (
    PulseSpec,
    SystemModel,
    eval_field,
    eval_field_derivative,
    eval_system,
    field_samples,
    induced_dipoles,
)
from .transform import (
    Detunings,
    TauMap,
    build_tau_map,
    detunings,
    f_diagonal,
    f_diagonal_samples,
    invert_tau,
)
from .dynamics import (
    FRAME_LAB,
    FRAME_RABI,
    FRAME_TAU,
    Amplitudes,
    PhaseIntegrals,
    Trace,
    integrate_lab,
    integrate_tau_full,
    integrate_tau_rwa,
    lab_generator,
    phase_integrals,
    rabi_reference,
    tau_generator,
    tau_trace_to_rabi,
    to_rabi_frame,
)
from .designer import (
    ChirpIterate,
    DesignReport,
    ResidualReport,
    TransferResult,
    chirp_residual,
    design_chirp,
    rwa_validity_metric,
    verify_transfer,
)
from .config import RunConfig, read_table, timefunction_from_spec, write_table

__all__ = [name for name in dir() if not name.startswith("_")]
