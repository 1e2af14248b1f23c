from typing import List, Optional

from ...core.data import DataMatrix, TailRegion
from ...models.enums import HISTOGRAM_TOKEN
from ..histogram import fit_tail_histogram, hist_tail_density
from . import register_estimator
from .base import TailEstimator, TailFit


@register_estimator
class HistogramEstimator(TailEstimator):
    """正态尺度箱宽的直方图尾部估计"""

    @property
    def estimator_name(self) -> str:
        return "histogram"

    @property
    def supported_tokens(self) -> List[str]:
        return [HISTOGRAM_TOKEN]

    def supports_dimension(self, token: str, d: int) -> bool:
        return d in (1, 2, 3)

    def fit(self, token: str, data: DataMatrix, region: TailRegion, points: Optional[int] = None,
            diag: bool = False) -> TailFit:
        tail = fit_tail_histogram(data, region, points=points)
        return TailFit(token=token, model=tail.base, tail=tail, region=region, details=dict(tail.details),
                       data=data)

    def retarget(self, fit: TailFit, region: TailRegion, points: Optional[int] = None) -> TailFit:
        # 箱的锚点仍为原阈值, 新阈值只截断箱
        tail = hist_tail_density(fit.model, region, points=points)
        return TailFit(token=fit.token, model=fit.model, tail=tail, region=region, details=dict(tail.details),
                       data=fit.data)
