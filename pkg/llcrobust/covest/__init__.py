"""Location/scatter back ends: SCM, MCD and GDE."""
from __future__ import annotations

import numpy as np

from llcrobust.covest.gde import gamma_objective, gde
from llcrobust.covest.generics import DegenerateDataError, mahalanobis_sq
from llcrobust.covest.mcd import c_step, mcd, mcd_consistency_factor, mcd_h, mcd_max_breakdown
from llcrobust.covest.scm import scm
from llcrobust.interface.llc_structs import CovEstimate, GdeConfig, McdConfig, Sample
from llcrobust.llc_enums import LLC_BACKEND


def estimate_covariance(
    sample: Sample,
    backend: LLC_BACKEND | str,
    *,
    mcd_cfg: McdConfig | None = None,
    gde_cfg: GdeConfig | None = None,
    rng: np.random.Generator | None = None,
) -> CovEstimate:
    backend = LLC_BACKEND.parse(backend)
    if backend is LLC_BACKEND.SCM:
        return scm(sample)
    if backend is LLC_BACKEND.MCD:
        return mcd(sample, mcd_cfg, rng)
    return gde(sample, gde_cfg, rng, mcd_cfg)


__all__ = [
    "DegenerateDataError",
    "c_step",
    "estimate_covariance",
    "gamma_objective",
    "gde",
    "mahalanobis_sq",
    "mcd",
    "mcd_consistency_factor",
    "mcd_h",
    "mcd_max_breakdown",
    "scm",
]
