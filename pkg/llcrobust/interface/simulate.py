from __future__ import annotations

import logging

import numpy as np

from llcrobust.interface.llc_structs import (
    CausalModel,
    ContaminationSpec,
    Experiment,
    ExperimentDesign,
    InterventionSpec,
    Sample,
)
from llcrobust.interface.model import experiment_inverse, experiment_matrices
from llcrobust.llc_enums import LLC_TARGET

log = logging.getLogger(__name__)


class ContaminationError(ValueError):
    """Raised when a contamination cannot be applied to a sample."""


def draw_sample(
    model: CausalModel,
    exp: Experiment,
    n: int,
    spec: InterventionSpec | None,
    rng: np.random.Generator,
) -> Sample:
    """Draw n realizations of x = (I - U B)^{-1}(U e + J c)."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    spec = spec or InterventionSpec()
    d = model.d
    A = experiment_inverse(model, exp)

    e = rng.multivariate_normal(np.zeros(d), model.SigmaE, size=n, method="eigh")
    c = np.zeros((n, d))
    if exp.J:
        SigmaC = spec.covariance(d, exp.J)[np.ix_(exp.J, exp.J)]
        c[:, exp.J] = rng.multivariate_normal(np.zeros(len(exp.J)), SigmaC, size=n, method="eigh")

    J, U = experiment_matrices(exp, d)
    residual = e @ U + c @ J  # rows of (U e + J c)^T
    data = residual @ A.T
    if exp.J:
        # J (I - U B)^{-1} = J, so intervened coordinates are the c draws
        data[:, exp.J] = c[:, exp.J]
    return Sample(experiment=exp, data=data)


def draw_design_samples(
    model: CausalModel,
    design: ExperimentDesign,
    n: int,
    spec: InterventionSpec | None,
    rng: np.random.Generator,
) -> list[Sample]:
    return [draw_sample(model, exp, n, spec, rng) for exp in design.experiments]


def contaminate(
    sample: Sample,
    model: CausalModel,
    spec: ContaminationSpec,
    rng: np.random.Generator,
) -> Sample:
    """Replace floor(rate * n) rows of the sample.

    Rows are chosen as a prefix of one random permutation and outliers are
    drawn for every row before slicing, so for a fixed generator state a
    smaller rate contaminates a subset of the rows a larger rate does.
    """
    exp = sample.experiment
    if spec.target is LLC_TARGET.C and exp.is_observational:
        raise ContaminationError("the observational experiment has no intervention variables c")

    n, d = sample.n, sample.d
    m = spec.n_replaced(n)
    if m == 0:
        return sample

    order = rng.permutation(n)
    outliers = rng.normal(spec.outlier_location, spec.outlier_scale, size=(n, d))
    rows = order[:m]
    outliers = outliers[:m]

    data = sample.data.copy()
    if spec.target is LLC_TARGET.X:
        data[rows] = outliers
    else:
        A = experiment_inverse(model, exp)
        _, U = experiment_matrices(exp, d)
        system = np.eye(d) - U @ model.B
        # recover (U e + J c) for the affected rows
        residual = data[rows] @ system.T
        cols = list(exp.U) if spec.target is LLC_TARGET.E else list(exp.J)
        residual[:, cols] = outliers[:, cols]
        replaced = residual @ A.T
        if exp.J:
            replaced[:, exp.J] = residual[:, exp.J]
        data[rows] = replaced

    log.debug(
        "contaminated %d/%d rows of %s (target %s)", m, n, exp.label(), spec.target.value
    )
    return sample.with_data(data)
