from enum import Enum
from typing import Dict, Tuple


class Space(str, Enum):
    """数据所在空间"""
    ORIGINAL = "original"
    TRANSFORMED = "transformed"


class KdeKind(str, Enum):
    """核估计类型"""
    STANDARD = "standard"
    TRANSFORMATION = "transformation"


class SelectorKind(str, Enum):
    """带宽选择器"""
    NS = "NS"
    PI = "PI"
    UCV = "UCV"
    SCV = "SCV"


class UnivariateFamily(str, Enum):
    """一元极值分布族"""
    GUMBEL = "gumbel"
    FRECHET = "frechet"
    GEV = "gev"
    GPD = "gpd"


class BivariateFamily(str, Enum):
    """二元最大稳定分布族"""
    BILOGISTIC = "bilogistic"
    ANL = "anl"
    HUSLER_REISS = "husler_reiss"


class IndexKind(str, Enum):
    """尾部指标类型, 由参考估计和损失共同决定"""
    HIST_L2 = "T~2"
    HIST_L1 = "T~1"
    TRANSFORMATION_L2 = "T^2"
    TRANSFORMATION_L1 = "T^1"
    STANDARD_L2 = "T^*2"
    STANDARD_L1 = "T^*1"
    GPD_L2 = "Tv2"
    GPD_L1 = "Tv1"


class Loss(str, Enum):
    L1 = "l1"
    L2 = "l2"


# 命令行估计器标识 -> (核类型, 选择器)
KERNEL_TOKENS: Dict[str, Tuple[KdeKind, SelectorKind]] = {
    "kns": (KdeKind.TRANSFORMATION, SelectorKind.NS),
    "kpi": (KdeKind.TRANSFORMATION, SelectorKind.PI),
    "kuc": (KdeKind.TRANSFORMATION, SelectorKind.UCV),
    "ksc": (KdeKind.TRANSFORMATION, SelectorKind.SCV),
    "kns*": (KdeKind.STANDARD, SelectorKind.NS),
    "kpi*": (KdeKind.STANDARD, SelectorKind.PI),
    "kuc*": (KdeKind.STANDARD, SelectorKind.UCV),
    "ksc*": (KdeKind.STANDARD, SelectorKind.SCV),
}

# 参数估计器标识
PARAMETRIC_TOKENS: Dict[str, str] = {
    "gpd+": "gpd_exceedance",
    "gum": UnivariateFamily.GUMBEL.value,
    "fre": UnivariateFamily.FRECHET.value,
    "gev": UnivariateFamily.GEV.value,
    "gpd": UnivariateFamily.GPD.value,
    "bil": BivariateFamily.BILOGISTIC.value,
    "anl": BivariateFamily.ANL.value,
    "hr": BivariateFamily.HUSLER_REISS.value,
}

HISTOGRAM_TOKEN = "hist"

# 模型选择中使用的一元 / 二元候选模型简称
UNIVARIATE_CANDIDATES = ("fre", "gum", "gpd")
BIVARIATE_CANDIDATES = ("bil", "anl", "hr")


def index_kind(reference_token: str, loss: Loss) -> IndexKind:
    """根据参考估计器标识和损失类型确定指标类型"""
    l1 = loss == Loss.L1
    if reference_token == HISTOGRAM_TOKEN:
        return IndexKind.HIST_L1 if l1 else IndexKind.HIST_L2
    if reference_token == "gpd+":
        return IndexKind.GPD_L1 if l1 else IndexKind.GPD_L2
    if reference_token.endswith("*"):
        return IndexKind.STANDARD_L1 if l1 else IndexKind.STANDARD_L2
    return IndexKind.TRANSFORMATION_L1 if l1 else IndexKind.TRANSFORMATION_L2
