"""Per-channel nonlinear interference, SNR budgets and achievable information
rates for wideband EDFA and distributed Raman amplified fiber links."""

__version__ = "0.1.0"

from .units import (  # noqa: F401
    ChannelGrid,
    ConfigError,
    Edfa,
    FiberParams,
    QuadratureSettings,
    Raman,
    SpanPlan,
    SystemConfig,
    preset_edfa,
    preset_raman,
    validate_config,
)
from .numerics import NumericalError  # noqa: F401
from .gn import NliSpectrum, eta_spectrum  # noqa: F401
from .budget import Mode, SnrRecord, ase_budget, snr_spectrum  # noqa: F401
from .shaping import AirReport, air_report  # noqa: F401
