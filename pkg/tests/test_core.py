import numpy as np
import pytest

from tailkde.core.data import BandwidthMatrix, DataMatrix, TailRegion, empirical_quantile, read_csv
from tailkde.core.errors import CONVERGENCE_EXIT_CODE, ConfigError, DataError, EstimationError
from tailkde.core.grid import grid_from_axes, make_grid
from tailkde.core.rng import RngStream
from tailkde.services.bandwidth import ns_bandwidth


class TestRngStream:
    def test_same_stream_is_reproducible(self):
        a = RngStream(7, 3).generator().uniform(size=5)
        b = RngStream(7, 3).generator().uniform(size=5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 0).generator().uniform(size=5)
        b = RngStream(7, 1).generator().uniform(size=5)
        assert not np.allclose(a, b)

    def test_substream_differs_from_parent(self):
        parent = RngStream(7, 2)
        assert parent.substream(0) != parent
        assert parent.substream(0) == RngStream(7, 2).substream(0)

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            RngStream(-1)


class TestDataMatrix:
    def test_vector_becomes_column(self):
        data = DataMatrix(np.arange(4.0))
        assert (data.n, data.d) == (4, 1)

    def test_unsupported_dimension(self):
        with pytest.raises(DataError, match="not supported"):
            DataMatrix(np.zeros((3, 4)))

    def test_non_finite_value_reports_position(self):
        with pytest.raises(DataError, match="row 2, column 1"):
            DataMatrix(np.array([[1.0, 2.0], [np.nan, 1.0]]))

    def test_values_are_read_only(self):
        data = DataMatrix(np.arange(3.0))
        with pytest.raises(ValueError):
            data.values[0, 0] = 5.0

    def test_exceedances_require_all_coordinates(self):
        data = DataMatrix(np.array([[1.0, 5.0], [3.0, 3.0], [4.0, 0.5]]))
        tail = data.exceedances(np.array([2.0, 2.0]))
        np.testing.assert_array_equal(tail.values, [[3.0, 3.0]])

    def test_empty_tail_raises(self):
        with pytest.raises(DataError, match="above the threshold"):
            DataMatrix(np.arange(3.0)).exceedances(np.array([10.0]))

    def test_tie_fraction(self):
        data = DataMatrix(np.array([1.0, 1.0, 2.0, 3.0]))
        assert data.tie_fraction() == pytest.approx(0.5)

    def test_single_row_is_allowed_in_memory(self):
        data = DataMatrix(np.array([2.0]))
        assert (data.n, data.d) == (1, 1)
        with pytest.raises(DataError):
            ns_bandwidth(data)


class TestBandwidthMatrix:
    def test_from_scalar(self):
        H = BandwidthMatrix.from_scalar(0.5, 2)
        np.testing.assert_allclose(H.H, 0.25 * np.eye(2))
        assert H.det == pytest.approx(0.0625)

    def test_not_symmetric(self):
        with pytest.raises(EstimationError, match="symmetric"):
            BandwidthMatrix(np.array([[1.0, 0.2], [0.0, 1.0]]))

    def test_not_positive_definite(self):
        with pytest.raises(EstimationError, match="positive-definite"):
            BandwidthMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_zero_matrix_allowed(self):
        assert BandwidthMatrix.zeros(2).is_zero


class TestTailRegion:
    def test_offset_must_be_below_threshold(self):
        with pytest.raises(DataError):
            TailRegion(u=np.array([1.0]), u0=np.array([1.0]))

    def test_bind_checks_offset_against_data(self):
        region = TailRegion(u=np.array([2.0]), u0=np.array([0.5]))
        with pytest.raises(DataError, match="below every observation"):
            region.bind(DataMatrix(np.array([0.2, 3.0])))

    def test_with_threshold_keeps_offset(self):
        region = TailRegion(u=np.array([2.0]), u0=np.array([0.5]), quantile_level=0.9)
        moved = region.with_threshold([3.0], 0.95)
        np.testing.assert_array_equal(moved.u0, [0.5])
        assert moved.quantile_level == 0.95


class TestEmpiricalQuantile:
    def test_linear_interpolation(self):
        data = DataMatrix(np.array([0.0, 1.0]))
        assert empirical_quantile(data, 0.95)[0] == pytest.approx(0.95)

    @pytest.mark.parametrize("p", [0.0, 1.0, 1.5])
    def test_level_outside_open_interval(self, p):
        with pytest.raises(DataError):
            empirical_quantile(DataMatrix(np.arange(5.0)), p)


class TestReadCsv:
    def test_header_detected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("a,b\n1,2\n3,4\n", encoding="utf-8")
        data = read_csv(path)
        assert data.columns == ["a", "b"]
        np.testing.assert_array_equal(data.values, [[1.0, 2.0], [3.0, 4.0]])

    def test_no_header_gets_default_names(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("1,2\n3,4\n", encoding="utf-8")
        data = read_csv(path)
        assert data.columns == ["x1", "x2"]
        assert data.n == 2

    def test_select_columns_by_name_and_number(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("a,b,c\n1,2,3\n4,5,6\n", encoding="utf-8")
        assert read_csv(path, ["c"]).values[:, 0].tolist() == [3.0, 6.0]
        assert read_csv(path, ["2"]).values[:, 0].tolist() == [2.0, 5.0]

    def test_missing_value_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,\n", encoding="utf-8")
        with pytest.raises(DataError, match="line 3, column 'b'"):
            read_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="input file not found"):
            read_csv(tmp_path / "nope.csv")

    def test_unknown_column(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("a\n1\n", encoding="utf-8")
        with pytest.raises(DataError, match="column 'z' not found"):
            read_csv(path, ["z"])

    def test_single_row_file_is_rejected(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError, match="at least 2 observations"):
            read_csv(path)


class TestGrid:
    def test_two_point_trapezoid(self):
        region = TailRegion(u=np.array([0.0]), u0=np.array([-1.0]))
        grid = make_grid(region, [1.0], points_per_axis=2, spacing="linear")
        np.testing.assert_allclose(grid.weights, [0.5, 0.5])

    def test_log_spacing_keeps_endpoints(self):
        region = TailRegion(u=np.array([1.0]), u0=np.array([0.0]))
        grid = make_grid(region, [10.0], points_per_axis=50, spacing="log")
        assert grid.lower[0] == 1.0
        assert grid.upper[0] == 10.0
        assert grid.volume == pytest.approx(9.0)

    def test_affine_integrand_is_exact_in_2d(self):
        region = TailRegion(u=np.array([0.0, 1.0]), u0=np.array([-1.0, 0.0]))
        grid = make_grid(region, [2.0, 3.0], points_per_axis=17, spacing="log")
        pts = grid.points()
        # ∫∫ (x + 2y) dx dy over [0,2]×[1,3] = 4 + 16
        assert grid.integrate(pts[:, 0] + 2.0 * pts[:, 1]) == pytest.approx(20.0)

    def test_upper_must_exceed_threshold(self):
        region = TailRegion(u=np.array([1.0]), u0=np.array([0.0]))
        with pytest.raises(DataError):
            make_grid(region, [1.0])

    def test_refined_grid(self):
        grid = grid_from_axes([np.array([0.0, 1.0, 3.0])])
        fine = grid.refined(2)
        np.testing.assert_allclose(fine.axes[0], [0.0, 0.5, 1.0, 2.0, 3.0])

    def test_negative_values_rejected(self):
        grid = grid_from_axes([np.array([0.0, 1.0])])
        with pytest.raises(DataError):
            grid.with_values(np.array([1.0, -1.0]))


def test_exit_codes():
    assert DataError("x").exit_code == 2
    assert EstimationError("x").exit_code == 2
    assert ConfigError("x").exit_code == 4
    assert CONVERGENCE_EXIT_CODE == 3
