"""Monte Carlo contamination benchmark.

Every model is an independent unit whose generators derive from
(master_seed, model_id), so results do not depend on scheduling.
"""
from __future__ import annotations

import itertools
import logging
import time
from collections import defaultdict
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import median_abs_deviation

from llcrobust.bench.wilcoxon import wilcoxon_signed_rank
from llcrobust.interface.llc import BackendError, diagnostic_flag, llc_fit
from llcrobust.interface.llc_structs import (
    AggregateRow,
    BenchmarkConfig,
    BenchmarkRecord,
    BenchmarkReport,
    ContaminationSpec,
    LlcEstimate,
    PValueRow,
    Sample,
)
from llcrobust.interface.model import ModelGenerationError, random_model, single_intervention_design
from llcrobust.interface.simulate import contaminate, draw_design_samples
from llcrobust.llc_enums import LLC_FLAG, LLC_TARGET
from llcrobust.utils import derive_rng

log = logging.getLogger(__name__)

# generator stream tags under (master_seed, model_id)
_STREAM_SAMPLE = 1
_STREAM_CONTAMINATION = 2
_STREAM_BACKEND = 3


def rfe(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Relative Frobenius error ||estimate - truth||_F / ||truth||_F."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch {estimate.shape} vs {truth.shape}")
    scale = np.linalg.norm(truth)
    if scale == 0:
        raise ValueError("relative error is undefined for a zero truth matrix")
    return float(np.linalg.norm(estimate - truth) / scale)


def _contaminated_design(
    samples: Sequence[Sample],
    model,
    spec: ContaminationSpec,
    cfg: BenchmarkConfig,
    model_id: int,
) -> list[Sample]:
    out = []
    for k, sample in enumerate(samples):
        if spec.target is LLC_TARGET.C and sample.experiment.is_observational:
            out.append(sample)
            continue
        rng = derive_rng(cfg.master_seed, model_id, _STREAM_CONTAMINATION, k)
        out.append(contaminate(sample, model, spec, rng))
    return out


def _flag_for(estimate: LlcEstimate, rfe_b: float, rfe_s: float) -> LLC_FLAG:
    if not (np.isfinite(rfe_b) and np.isfinite(rfe_s)):
        return LLC_FLAG.NOT_FINITE
    return diagnostic_flag(estimate.diagnostics)


def run_model(cfg: BenchmarkConfig, model_id: int) -> list[BenchmarkRecord]:
    """All (estimator, epsilon) records of one random model."""
    nan = float("nan")

    def failed(flag: LLC_FLAG) -> list[BenchmarkRecord]:
        return [
            BenchmarkRecord(model_id, est, eps, nan, nan, 0.0, flag)
            for eps in cfg.epsilons
            for est in cfg.estimators
        ]

    try:
        model = random_model(
            cfg.d, cfg.edge_prob, cfg.conf_prob, np.random.default_rng(cfg.master_seed + model_id)
        )
    except ModelGenerationError:
        log.warning("model %d could not be generated", model_id, exc_info=True)
        return failed(LLC_FLAG.GENERATION_FAILED)
    if not np.any(model.B):
        return failed(LLC_FLAG.ZERO_TRUTH)

    design = single_intervention_design(cfg.d)
    base = draw_design_samples(
        model, design, cfg.n, None, derive_rng(cfg.master_seed, model_id, _STREAM_SAMPLE)
    )

    records: list[BenchmarkRecord] = []
    for e_idx, eps in enumerate(cfg.epsilons):
        spec = ContaminationSpec(
            rate=eps,
            target=cfg.target,
            outlier_location=cfg.outlier_location,
            outlier_scale=cfg.outlier_scale,
        )
        samples = _contaminated_design(base, model, spec, cfg, model_id)
        for est in cfg.estimators:
            # every estimator sees the same samples and the same back-end stream
            rng = derive_rng(cfg.master_seed, model_id, _STREAM_BACKEND, e_idx)
            started = time.perf_counter()
            try:
                estimate = llc_fit(
                    samples, design, est, mcd_cfg=cfg.mcd, gde_cfg=cfg.gde, lam=cfg.ridge, rng=rng
                )
            except BackendError:
                log.warning("model %d, %s, eps=%g failed", model_id, est.value, eps, exc_info=True)
                records.append(BenchmarkRecord(model_id, est, eps, nan, nan, 0.0, LLC_FLAG.BACKEND_FAILED))
                continue
            elapsed = time.perf_counter() - started
            rfe_b = rfe(estimate.B_hat, model.B)
            rfe_s = rfe(estimate.SigmaE_hat, model.SigmaE)
            records.append(
                BenchmarkRecord(model_id, est, eps, rfe_b, rfe_s, elapsed, _flag_for(estimate, rfe_b, rfe_s))
            )
    return records


def _target_values(records: Iterable[BenchmarkRecord], target: str) -> dict[int, float]:
    attr = "rfe_b" if target == "B" else "rfe_sigma_e"
    out = {}
    for r in records:
        value = getattr(r, attr)
        if np.isfinite(value):
            out[r.model_id] = value
    return out


def aggregate(records: Sequence[BenchmarkRecord]) -> list[AggregateRow]:
    """Median and unscaled MAD per (estimator, epsilon, target)."""
    groups: dict[tuple, list[BenchmarkRecord]] = defaultdict(list)
    order: list[tuple] = []
    for r in records:
        key = (r.estimator, r.epsilon)
        if key not in groups:
            order.append(key)
        groups[key].append(r)

    rows = []
    for estimator, eps in order:
        for target in BenchmarkReport.TARGETS:
            values = np.array(list(_target_values(groups[(estimator, eps)], target).values()))
            if values.size == 0:
                rows.append(AggregateRow(estimator, eps, target, float("nan"), float("nan"), 0))
                continue
            rows.append(
                AggregateRow(
                    estimator=estimator,
                    epsilon=eps,
                    target=target,
                    median=float(np.median(values)),
                    mad=float(median_abs_deviation(values, scale=1.0)),
                    count=int(values.size),
                )
            )
    return rows


def pairwise_pvalues(records: Sequence[BenchmarkRecord], cfg: BenchmarkConfig) -> list[PValueRow]:
    by_key: dict[tuple, list[BenchmarkRecord]] = defaultdict(list)
    for r in records:
        by_key[(r.estimator, r.epsilon)].append(r)

    rows = []
    for eps in cfg.epsilons:
        for target in BenchmarkReport.TARGETS:
            for est_a, est_b in itertools.combinations(cfg.estimators, 2):
                va = _target_values(by_key[(est_a, eps)], target)
                vb = _target_values(by_key[(est_b, eps)], target)
                shared = sorted(set(va) & set(vb))
                if len(shared) < 5:
                    p = float("nan")
                else:
                    p = wilcoxon_signed_rank([va[m] for m in shared], [vb[m] for m in shared])
                rows.append(PValueRow(eps, target, est_a, est_b, p))
    return rows


def run_benchmark(
    cfg: BenchmarkConfig,
    *,
    jobs: int = 1,
    progress_cb: Callable[[int, int], None] | None = None,
) -> BenchmarkReport:
    log.info(
        "benchmark: %d models, d=%d, n=%d, eps=%s, estimators=%s, seed=%d",
        cfg.n_models, cfg.d, cfg.n, list(cfg.epsilons),
        [e.value for e in cfg.estimators], cfg.master_seed,
    )
    total = cfg.n_models
    records: list[BenchmarkRecord] = []
    done = 0
    if jobs <= 1:
        for model_id in range(total):
            records.extend(run_model(cfg, model_id))
            done += 1
            if progress_cb is not None:
                progress_cb(done, total)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_model, cfg, model_id) for model_id in range(total)]
            for future in as_completed(futures):
                records.extend(future.result())
                done += 1
                if progress_cb is not None:
                    progress_cb(done, total)

    eps_rank = {eps: i for i, eps in enumerate(cfg.epsilons)}
    est_rank = {est: i for i, est in enumerate(cfg.estimators)}
    records.sort(key=lambda r: (r.model_id, eps_rank[r.epsilon], est_rank[r.estimator]))

    report = BenchmarkReport(config=cfg, records=records)
    report.aggregates = aggregate(records)
    report.pvalues = pairwise_pvalues(records, cfg)
    flagged = sum(1 for r in records if r.flag != LLC_FLAG.NONE)
    log.info("benchmark finished: %d records, %d flagged", len(records), flagged)
    return report
