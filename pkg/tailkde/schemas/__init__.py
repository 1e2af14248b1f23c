# 输出模式包初始化文件
from .common import ErrorResponse, ReportBase, ResponseBase
from .fit import (
    CompareReport,
    CompareRow,
    FitReport,
    GridSchema,
    IndexEntry,
    SelectionReport,
    SelectorResultSchema,
    TailReport,
    ThresholdEntry,
)
from .study import ExperimentConfig, FailureSummary, StudyReport
from .theory import TheoryCheck, TheoryReport
