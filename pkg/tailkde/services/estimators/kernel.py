from typing import List, Optional

from ...core.data import DataMatrix, TailRegion
from ...core.logging import logger
from ...models.enums import KERNEL_TOKENS, KdeKind
from ..bandwidth import select_bandwidth
from ..kde import fit_kde, tail_density
from ..transform import fit_transform
from . import register_estimator
from .base import TailEstimator, TailFit


@register_estimator
class KernelEstimator(TailEstimator):
    """变换核(kns/kpi/kuc/ksc)与标准核(带星号)尾部估计"""

    @property
    def estimator_name(self) -> str:
        return "kernel"

    @property
    def supported_tokens(self) -> List[str]:
        return list(KERNEL_TOKENS.keys())

    def supports_dimension(self, token: str, d: int) -> bool:
        return d in (1, 2, 3)

    def fit(self, token: str, data: DataMatrix, region: TailRegion, points: Optional[int] = None,
            diag: bool = False) -> TailFit:
        kind, selector = KERNEL_TOKENS[token]
        if kind == KdeKind.TRANSFORMATION:
            region.bind(data)
            transform = fit_transform(data, region.u0)
            # 带宽在对数空间的全样本上选择
            result = select_bandwidth(transform.apply(data), selector, diag=diag)
            model = fit_kde(data, result.H, kind, transform)
        else:
            result = select_bandwidth(data, selector, diag=diag)
            model = fit_kde(data, result.H, kind)
        logger.info(f"{token}: {selector.value} 带宽选择完成, 收敛={result.converged}")
        tail = tail_density(model, region, points, estimator_id=token)
        return TailFit(token=token, model=model, tail=tail, region=region, converged=result.converged,
                       selector=result, details={"bandwidth": result.H.tolist(), "kind": kind.value},
                       data=data)

    def retarget(self, fit: TailFit, region: TailRegion, points: Optional[int] = None) -> TailFit:
        tail = tail_density(fit.model, region, points, estimator_id=fit.token)
        return TailFit(token=fit.token, model=fit.model, tail=tail, region=region, converged=fit.converged,
                       selector=fit.selector, details=fit.details, data=fit.data)
