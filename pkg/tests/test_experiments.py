import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcap import __version__
from hybridcap.emit import EmitError, emit, read_csv, to_csv
from hybridcap.errors import ConfigError
from hybridcap.experiments import (SweepSpec, SweepTable, max_workers, resolve_config,
                                   run_fig1, run_fig2, run_fig3, run_fig4)

FAST = {"grid_points": 512, "freq_grid_points": 256}


def fast(**kw):
    return FAST | kw


class TestSweepSpec:
    def test_grid_must_increase(self):
        with pytest.raises(ConfigError):
            SweepSpec("frequency", [1.0, 1.0, 2.0])

    def test_grid_nonempty(self):
        with pytest.raises(ConfigError):
            SweepSpec("frequency", [])

    def test_series_distinct(self):
        with pytest.raises(ConfigError):
            SweepSpec("frequency", [1.0, 2.0], series=(1.0, 1.0))

    def test_bad_axis_and_normalize(self):
        with pytest.raises(ConfigError):
            SweepSpec("colour", [1.0])
        with pytest.raises(ConfigError):
            SweepSpec("frequency", [1.0], normalize="min")

    def test_resolve_overrides(self):
        cfg = resolve_config("fig1", {"seed": 7, "series": {"values": [50.0]}})
        assert cfg["seed"] == 7
        assert cfg["series"] == {"name": "temperature", "values": [50.0]}
        assert cfg["grid"]["num"] == 50

    def test_unknown_figure(self):
        with pytest.raises(ConfigError):
            resolve_config("fig7")


def test_hnc_threads(monkeypatch):
    monkeypatch.setenv("HNC_THREADS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("HNC_THREADS", "lots")
    with pytest.raises(ConfigError):
        max_workers()


@pytest.fixture(scope="module")
def fig1_table():
    return run_fig1(fast(grid={"start": 1e6, "stop": 1e9, "num": 8, "spacing": "log"}))


@pytest.fixture(scope="module")
def fig3_table():
    return run_fig3(fast())


class TestFig1:
    @pytest.fixture
    def table(self, fig1_table):
        return fig1_table

    def test_shape_and_columns(self, table):
        assert len(table) == 8
        assert table.columns[0] == "frequency"
        assert table.plot_columns == ["temperature=100K", "temperature=300K", "temperature=600K"]
        assert "temperature=100K_db" in table.columns
        assert "temperature=100K_psd_w_per_hz" in table.columns

    def test_max_to_one(self, table):
        for c in table.plot_columns:
            assert np.max(table.column(c)) == 1.0
            assert np.max(table.column(c + "_db")) == 0.0

    def test_finite(self, table):
        assert np.all(np.isfinite(table.rows)) and not table.flagged

    def test_metadata(self, table):
        md = table.metadata
        assert md["toolkit_version"] == __version__
        assert md["seed"] == 42
        assert md["config"]["figure"] == "fig1"
        assert md["normalize"] == "max_to_one"


def test_fig2_single_point():
    t = run_fig2(fast(grid=[290.0], series={"values": [1e4]}))
    assert t.rows.shape[0] == 1


def test_fig2_increasing_in_temperature():
    t = run_fig2(fast(grid={"start": 100, "stop": 1000, "num": 6}))
    for c in t.plot_columns:
        assert np.all(np.diff(t.column(c)) > 0)


def test_flagged_cells_become_nan():
    t = run_fig1(fast(grid=[1e6, 1e7], series={"name": "temperature", "values": [-5.0, 300.0]}))
    assert len(t.flagged) == 2
    assert np.all(np.isnan(t.column("temperature=-5K_psd_w_per_hz")))
    assert np.all(np.isfinite(t.column("temperature=300K_psd_w_per_hz")))


class TestFig3:
    @pytest.fixture
    def table(self, fig3_table):
        return fig3_table

    def test_columns_integrate_to_one(self, table):
        n = table.column("n")
        for c in table.plot_columns:
            assert np.trapezoid(table.column(c), n) == pytest.approx(1.0, abs=1e-6)

    def test_tail_humps(self, table):
        tm = table.metadata["tail_mass_3sigma"]
        assert tm["photons=5000"] > tm["photons=100"]


def test_fig4_columns_and_shannon():
    t = run_fig4(fast(grid=[1000.0, 2000.0],
                      envelopes=[{"kind": "rayleigh", "params": [2 ** -0.5]}]))
    assert t.columns == ["photons", "cqc_per_hz", "psd_w_per_hz", "fading_rayleigh_per_hz",
                         "shannon_per_hz"]
    np.testing.assert_allclose(t.column("shannon_per_hz"), math.log2(1.1), rtol=1e-15)
    assert np.all(t.column("fading_rayleigh_per_hz") <= t.column("cqc_per_hz"))


class TestEmit:
    def _table(self, cols=("x", "a")):
        rows = np.column_stack([np.arange(3.0)] + [np.linspace(0.1, 1 / 3, 3)] * (len(cols) - 1))
        return SweepTable(list(cols), rows, {"seed": 42, "config": {"figure": None}},
                          list(cols[1:]))

    def test_csv_format(self, tmp_path):
        t = self._table()
        path = tmp_path / "t.csv"
        emit(t, "csv", path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("utf-8").split("\n")
        assert lines[0] == "x,a"
        assert lines[2].split(",")[1] == format(np.linspace(0.1, 1 / 3, 3)[1], ".17g")

    def test_axis_only(self):
        t = SweepTable(["x"], np.arange(3.0)[:, None], {})
        assert to_csv(t.columns, t.rows) == "x\n0\n1\n2\n"

    def test_csv_roundtrip_bits(self, tmp_path):
        t = self._table(("x", "a", "b"))
        path = tmp_path / "t.csv"
        emit(t, "csv", path)
        cols, rows = read_csv(path)
        assert cols == t.columns
        assert rows.tobytes() == t.rows.tobytes()

    def test_json_has_config(self):
        t = self._table()
        doc = json.loads(emit(t, "json"))
        assert doc["metadata"]["config"] == {"figure": None}
        assert doc["columns"] == ["x", "a"] and len(doc["rows"]) == 3

    def test_svg_axes_and_lines(self):
        svg = emit(self._table(("x", "a", "b")), "svg")
        assert svg.lstrip().startswith("<?xml")
        assert svg.count('id="line2d_') >= 2
        assert emit(self._table(("x", "a", "b")), "svg") == svg

    def test_unwritable(self, tmp_path):
        with pytest.raises(EmitError):
            emit(self._table(), "csv", tmp_path / "missing" / "t.csv")

    def test_bad_format(self):
        with pytest.raises(ValueError):
            emit(self._table(), "xlsx")


@settings(max_examples=100)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=30))
def test_csv_roundtrip_property(values):
    rows = np.asarray(values, dtype=float)[:, None]
    text = to_csv(["v"], rows)
    back = np.array([float(v) for v in text.split("\n")[1:-1]])
    assert back.tobytes() == rows[:, 0].tobytes()
