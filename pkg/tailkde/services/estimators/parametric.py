from typing import List, Optional

from ...core.data import DataMatrix, TailRegion
from ...core.errors import EstimationError
from ...models.enums import PARAMETRIC_TOKENS, BivariateFamily, UnivariateFamily
from ..kde import tail_from_density, tail_upper
from ..parametric.bivariate import fit_bivariate
from ..parametric.univariate import fit_univariate
from . import register_estimator
from .base import TailEstimator, TailFit

GPD_EXCEEDANCE = "gpd+"


@register_estimator
class ParametricEstimator(TailEstimator):
    """
    极大似然参数估计

    gum/fre/gev/gpd 用全部样本拟合, gpd+ 只用超过阈值的观测;
    bil/anl/hr 为 GEV 边缘的二元最大稳定分布。尾部归一化常数取解析生存概率。
    """

    @property
    def estimator_name(self) -> str:
        return "parametric"

    @property
    def supported_tokens(self) -> List[str]:
        return list(PARAMETRIC_TOKENS.keys())

    def supports_dimension(self, token: str, d: int) -> bool:
        if token == GPD_EXCEEDANCE:
            return d == 1
        family = PARAMETRIC_TOKENS[token]
        if family in {f.value for f in BivariateFamily}:
            return d == 2
        return d == 1

    def _fit_model(self, token: str, data: DataMatrix, region: TailRegion):
        if token == GPD_EXCEEDANCE:
            return fit_univariate(data, UnivariateFamily.GPD, threshold=float(region.u[0]))
        family = PARAMETRIC_TOKENS[token]
        if family in {f.value for f in BivariateFamily}:
            return fit_bivariate(data, BivariateFamily(family))
        return fit_univariate(data, UnivariateFamily(family))

    def _tail(self, token: str, model, data: DataMatrix, region: TailRegion, points: Optional[int]):
        normalizer = model.survival(region.u)
        if not normalizer > 0:
            raise EstimationError(f"{token} model puts no mass above the threshold")
        return tail_from_density(model, region, tail_upper(data, region), points, estimator_id=token,
                                 normalizer=min(normalizer, 1.0), family=model.family.value)

    def fit(self, token: str, data: DataMatrix, region: TailRegion, points: Optional[int] = None,
            diag: bool = False) -> TailFit:
        model = self._fit_model(token, data, region)
        tail = self._tail(token, model, data, region, points)
        details = {"family": model.family.value, "loglik": model.loglik,
                   "params": model.params if hasattr(model, "params") else {}}
        if token != GPD_EXCEEDANCE and model.d == 2:
            details["margins"] = [list(m) for m in model.margins]
        return TailFit(token=token, model=model, tail=tail, region=region, converged=model.converged,
                       details=details, data=data)

    def retarget(self, fit: TailFit, region: TailRegion, points: Optional[int] = None) -> TailFit:
        data = fit.data
        if fit.token == GPD_EXCEEDANCE:
            # 超阈值 GPD 依赖阈值本身, 必须重新拟合
            return self.fit(fit.token, data, region, points)
        tail = self._tail(fit.token, fit.model, data, region, points)
        return TailFit(token=fit.token, model=fit.model, tail=tail, region=region, converged=fit.converged,
                       details=fit.details, data=data)
