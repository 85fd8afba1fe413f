from __future__ import annotations

from llcrobust.covest.generics import as_data, mean_and_scatter
from llcrobust.interface.llc_structs import CovEstimate, Sample
from llcrobust.llc_enums import LLC_BACKEND


def scm(sample: Sample) -> CovEstimate:
    """Sample covariance matrix with the unbiased (n - 1) divisor."""
    data = as_data(sample)
    mean, cov = mean_and_scatter(data)
    return CovEstimate(mean=mean, cov=cov, method=LLC_BACKEND.SCM, meta={"n": data.shape[0]})
