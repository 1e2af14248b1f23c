import json
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.data import DataMatrix
from ..schemas.common import ErrorResponse


def numpy_handler(obj):
    """处理 numpy 与 pydantic 对象的函数; Python 浮点数本身按最短往返表示输出"""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    raise TypeError(f"Object of type {type(obj)} is not JSON serializable")


def success_response(data=None, message=None) -> Dict[str, Any]:
    """
    统一的成功输出格式

    Args:
        data: 返回的数据内容(报告模型或字典)
        message: 成功描述信息

    Returns:
        Dict[str, Any]: {'success', 'message', 'results'}
    """
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    return {
        'success': True,
        'message': message,
        'results': data
    }


def error_response(message, exit_code: int = 1, error_code: Optional[str] = None) -> Dict[str, Any]:
    """
    统一的错误输出格式

    Args:
        message: 错误描述信息
        exit_code: 命令行退出码
        error_code: 错误类型名称

    Returns:
        Dict[str, Any]: 错误输出
    """
    return ErrorResponse(message=message, exit_code=exit_code, error_code=error_code).model_dump(mode="json")


def dumps(content: Any) -> str:
    return json.dumps(content, default=numpy_handler, indent=2, ensure_ascii=False)


def write_json(content: Any, path: Optional[Union[str, Path]] = None, stream=None) -> None:
    """写 JSON 到文件; path 为None时写到 stream(默认 stdout)"""
    text = dumps(content)
    if path is None:
        stream = stream or sys.stdout
        stream.write(text + "\n")
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")


def write_sample_csv(data: DataMatrix, path: Union[str, Path]) -> None:
    """按读取格式写样本: 表头 + 每行一个观测, 浮点数按最短往返表示"""
    columns = data.columns or [f"x{j + 1}" for j in range(data.d)]
    frame = pd.DataFrame(data.values, columns=columns)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=None)


def write_frame_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
