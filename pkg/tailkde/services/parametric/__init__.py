# 参数模型包初始化文件
from .bivariate import BivariateEvdFit, bivariate_density, fit_bivariate
from .pickands import exponent_measure, pickands
from .univariate import DevianceResult, UnivariateEvtFit, deviance_gumbel_vs_frechet, fit_univariate
