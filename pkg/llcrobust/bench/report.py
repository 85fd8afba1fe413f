from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from llcrobust import __version__
from llcrobust import bench_settings as defaults
from llcrobust.interface.llc_structs import BenchmarkRecord, BenchmarkReport
from llcrobust.transport.files import write_csv, write_json

log = logging.getLogger(__name__)

AGGREGATES_HEADER = ("estimator", "epsilon", "target", "median", "mad", "count")
PVALUES_HEADER = ("epsilon", "target", "estimator_a", "estimator_b", "p_value")
BOXPLOT_HEADER = ("epsilon", "estimator", "target", "model_id", "rfe", "log10_rfe")


def _boxplot_rows(records: list[BenchmarkRecord]):
    for r in records:
        for target, value in (("B", r.rfe_b), ("SigmaE", r.rfe_sigma_e)):
            if np.isfinite(value) and value > 0:
                yield (r.epsilon, r.estimator, target, r.model_id, value, float(np.log10(value)))


def emit_report(report: BenchmarkReport, out_dir: str | Path) -> list[Path]:
    """Write records, aggregates, p-values, box-plot data and the run manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = [
        write_csv(
            out_dir / "records.csv",
            BenchmarkRecord.CSV_HEADER,
            ((r.model_id, r.estimator, r.epsilon, r.rfe_b, r.rfe_sigma_e, r.flag) for r in report.records),
        ),
        write_csv(
            out_dir / "aggregates.csv",
            AGGREGATES_HEADER,
            ((a.estimator, a.epsilon, a.target, a.median, a.mad, a.count) for a in report.aggregates),
        ),
        write_csv(
            out_dir / "pvalues.csv",
            PVALUES_HEADER,
            ((p.epsilon, p.target, p.estimator_a, p.estimator_b, p.p_value) for p in report.pvalues),
        ),
        write_csv(out_dir / "boxplot.csv", BOXPLOT_HEADER, _boxplot_rows(report.records)),
    ]
    manifest = {
        "version": __version__,
        "config": report.config.to_dict(),
        "master_seed": report.config.master_seed,
        "records": len(report.records),
        "mad": "unscaled median absolute deviation",
        "wilcoxon": "two-sided; zero differences dropped, midranks for ties; exact up to 25 pairs",
        "boxplot": {"scale": "log10", "reference_line": defaults.REFERENCE_RFE},
        "files": [p.name for p in written],
    }
    written.append(write_json(out_dir / "manifest.json", manifest))
    log.info("report written to %s", out_dir)
    return written
