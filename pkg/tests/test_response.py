import io
import json

import numpy as np
import pytest

from tailkde.core.data import DataMatrix, read_csv
from tailkde.models.enums import Loss
from tailkde.schemas.theory import TheoryCheck
from tailkde.utils.response import dumps, error_response, numpy_handler, success_response, write_json, write_sample_csv


def test_numpy_values_serialize():
    content = json.loads(dumps({"a": np.arange(3), "b": np.float64(0.1), "c": np.int64(2), "d": np.bool_(True),
                                "e": Loss.L2}))
    assert content == {"a": [0, 1, 2], "b": 0.1, "c": 2, "d": True, "e": "l2"}


def test_unknown_object_is_rejected():
    with pytest.raises(TypeError):
        numpy_handler(object())


def test_success_response_dumps_models():
    check = TheoryCheck(name="x", prediction=1.0, estimate=1.0, tolerance=0.1, passed=True)
    response = success_response(check, "ok")
    assert response["success"] is True
    assert response["results"]["name"] == "x"


def test_error_response():
    response = error_response("bad input", 2, "DataError")
    assert response == {"success": False, "message": "bad input", "error_code": "DataError", "exit_code": 2}


def test_write_json_to_stream_and_file(tmp_path):
    stream = io.StringIO()
    write_json({"v": 1.5}, stream=stream)
    assert json.loads(stream.getvalue()) == {"v": 1.5}
    path = tmp_path / "nested" / "out.json"
    write_json({"v": 1.5}, path)
    assert json.loads(path.read_text(encoding="utf-8")) == {"v": 1.5}


def test_sample_csv_is_readable(tmp_path):
    values = np.array([[0.1 + 0.2, 1e-17], [np.pi, -2.5]])
    path = tmp_path / "sample.csv"
    write_sample_csv(DataMatrix(values), path)
    data = read_csv(path)
    assert data.columns == ["x1", "x2"]
    np.testing.assert_allclose(data.values, values, rtol=1e-15, atol=0)
