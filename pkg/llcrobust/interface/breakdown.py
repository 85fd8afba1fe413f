"""Finite counterexamples for the zero breakdown point of LLC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from llcrobust.interface.llc import assemble_constraints, condition_diagnostics, llc_fit, solve_b
from llcrobust.interface.llc_structs import CausalModel, ConstraintSystem, ExperimentDesign, TotalEffect
from llcrobust.interface.model import single_intervention_design
from llcrobust.interface.simulate import draw_design_samples
from llcrobust.utils import flatten_offdiag


@dataclass(frozen=True)
class TraceRow:
    parameter: float
    value: float
    reference: float | None = None


def effects_from_matrix(total: np.ndarray, design: ExperimentDesign) -> list[TotalEffect]:
    """Total effects total[u, i] for every (u in U_k, i in J_k) of the design."""
    total = np.asarray(total, dtype=float)
    return [
        TotalEffect(u=u, i=i, k=k, value=float(total[u, i]))
        for k, exp in enumerate(design.experiments)
        for u in exp.U
        for i in exp.J
    ]


def single_intervention_system(total: np.ndarray) -> ConstraintSystem:
    d = np.asarray(total).shape[0]
    design = single_intervention_design(d)
    return assemble_constraints(effects_from_matrix(total, design), design, d)


def scaled_outlier_trace(
    scales=(1e2, 1e4, 1e6),
    *,
    n: int = 50,
    seed: int = 7,
) -> list[TraceRow]:
    """Frobenius norm of the SCM-based B-hat when one observation of the J={1}
    experiment of a two-node model is multiplied by each scale."""
    model = CausalModel.from_matrices([[0.0, 0.0], [0.5, 0.0]], np.eye(2))
    design = single_intervention_design(2)
    samples = draw_design_samples(model, design, n, None, np.random.default_rng(seed))
    k = next(k for k, exp in enumerate(design.experiments) if exp.J == (0,))
    # the row with the largest cross product dominates the scaled covariance
    row = int(np.argmax(np.abs(samples[k].data[:, 0] * samples[k].data[:, 1])))

    rows = []
    for s in scales:
        data = samples[k].data.copy()
        data[row] *= s
        perturbed = list(samples)
        perturbed[k] = samples[k].with_data(data)
        estimate = llc_fit(perturbed, design, "SCM")
        rows.append(TraceRow(parameter=float(s), value=float(np.linalg.norm(estimate.B_hat))))
    return rows


def ridge_trace(t12: float = 3.0, t21: float = -4.0, lambdas=(0.0, 0.5, 1.0, 10.0)) -> list[TraceRow]:
    """Two-node system T = I: the ridge solution is t / (1 + lambda), unbounded in t."""
    system = single_intervention_system(np.array([[0.0, t12], [t21, 0.0]]))
    t_norm = float(np.linalg.norm(system.t))
    rows = []
    for lam in lambdas:
        b = flatten_offdiag(solve_b(system, lam))
        rows.append(TraceRow(parameter=float(lam), value=float(np.linalg.norm(b)), reference=t_norm / (1.0 + lam)))
    return rows


def singular_block_trace(t32: float = 2.0, offsets=(1.0, 1e-3, 1e-6, 1e-9, 0.0)) -> list[TraceRow]:
    """Condition number of the node-1 block [[1, t32], [t23, 1]] as t23 -> 1/t32."""
    rows = []
    for offset in offsets:
        total = np.full((3, 3), 0.3)
        np.fill_diagonal(total, 0.0)
        total[2, 1] = t32
        total[1, 2] = 1.0 / t32 + offset
        diag = condition_diagnostics(single_intervention_system(total))
        rows.append(
            TraceRow(
                parameter=float(offset),
                value=diag["block_conditions"][0],
                reference=1.0 if diag["ill_conditioned"] else 0.0,
            )
        )
    return rows
