"""Quantum-optical high-harmonic spectra of a laser-driven Hubbard chain."""

from ._core import (
    ModelParams,
    PulseParams,
    RunConfig,
    __version__,
    coherent_statistics,
    export_figures_data,
    ground_state_energy,
    mott_gap,
    parse_config_text,
    run_pipeline,
    sector_dimension,
    semiclassical_spectrum,
    time_grid,
    vector_potential,
)

__all__ = [
    "ModelParams",
    "PulseParams",
    "RunConfig",
    "__version__",
    "coherent_statistics",
    "export_figures_data",
    "ground_state_energy",
    "mott_gap",
    "parse_config_text",
    "run_pipeline",
    "sector_dimension",
    "semiclassical_spectrum",
    "time_grid",
    "vector_potential",
]
