"""Ensemble score filter data assimilation for wildfire perimeters."""

from ensf_da._core import (
    EARTH_RADIUS_KM,
    ConfigError,
    ModelError,
    NoiseSchedule,
    NumericalError,
    StepError,
    enkf_update,
    ensf_update,
    harmonize,
    haversine,
    normalize,
    normalize_about,
    resample,
    rmse_haversine,
    run,
    sde_predict,
    signed_area,
    synthetic_perimeter_step,
)

__all__ = [
    "EARTH_RADIUS_KM",
    "ConfigError",
    "ModelError",
    "NoiseSchedule",
    "NumericalError",
    "StepError",
    "enkf_update",
    "ensf_update",
    "harmonize",
    "haversine",
    "normalize",
    "normalize_about",
    "resample",
    "rmse_haversine",
    "run",
    "sde_predict",
    "signed_area",
    "synthetic_perimeter_step",
]
