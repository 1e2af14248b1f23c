import logging
import sys
from typing import Optional

from .config import settings


# 配置根日志记录器
def setup_logging(level: Optional[str] = None):
    """
    设置日志配置

    Args:
        level: 日志级别，为None时使用 settings.LOG_LEVEL

    Returns:
        logging.Logger: 应用日志记录器
    """
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper())

    # 日志写到 stderr, stdout 留给 JSON 输出
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stderr)
        ]
    )

    # 第三方库只保留警告
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("joblib").setLevel(logging.WARNING)

    logger = logging.getLogger(settings.APP_NAME)
    logger.setLevel(log_level)

    return logger


# 创建应用日志记录器
logger = setup_logging()
