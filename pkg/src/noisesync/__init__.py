"""Noise-driven synchronisation of class-B lasers and Landau-Stuart oscillators."""

__version__ = "0.1.0"

from .models import (  # noqa: E402
    BlowUpError,
    FloquetSet,
    LandauStuartParams,
    LaserParams,
    State,
    floquet_closed_form,
    phase_psi,
    reduce_to_landau_stuart,
    regime_boundaries,
)
from .noise import NoisePath, NoiseSpec  # noqa: E402
from .integrate import IntegratorConfig, Monochromatic, Trace, run, step  # noqa: E402
from .lyapunov import LyapunovEstimate, estimate_lambda_max, floquet_spectrum_numeric  # noqa: E402

__all__ = [
    "BlowUpError",
    "FloquetSet",
    "IntegratorConfig",
    "LandauStuartParams",
    "LaserParams",
    "LyapunovEstimate",
    "Monochromatic",
    "NoisePath",
    "NoiseSpec",
    "State",
    "Trace",
    "estimate_lambda_max",
    "floquet_closed_form",
    "floquet_spectrum_numeric",
    "phase_psi",
    "reduce_to_landau_stuart",
    "regime_boundaries",
    "run",
    "step",
]
