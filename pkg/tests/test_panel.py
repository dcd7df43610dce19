import io

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddditsa import (
    DesignSpec,
    PanelSeries,
    PanelValidationError,
    ParseError,
    SpecificationError,
    StructuralError,
    UnknownUnitError,
    aggregate_groups,
    load_csv,
    write_csv,
)
from ddditsa.panel import ColumnSchema, unit_blocks

from conftest import ddd_design_spec, make_panel


def _csv(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))


class TestLoadCsv:
    def test_minimal_single_unit(self):
        panel = load_csv(_csv("unit,time,outcome\nA,1,0\nA,2,0\nA,3,0\n"))
        assert panel.units == ("A",)
        np.testing.assert_array_equal(panel.time_index, [1, 2, 3])
        np.testing.assert_array_equal(panel.series("A"), [0.0, 0.0, 0.0])

    def test_row_order_is_irrelevant(self, rng):
        panel = make_panel(rng)
        frame = panel.to_frame()
        shuffled = frame.sample(frac=1.0, random_state=3)
        a = load_csv(_csv(frame.to_csv(index=False)))
        b = load_csv(_csv(shuffled.to_csv(index=False)))
        assert a.equals(b)

    def test_round_trip(self, rng, tmp_path):
        panel = make_panel(rng)
        path = tmp_path / "panel.csv"
        write_csv(panel, path)
        assert load_csv(path).equals(panel)

    def test_extras_are_passed_through(self):
        text = "unit,time,outcome,price,note\nA,1,1,2.5,x\nA,2,2,2.6,y\nA,3,3,,z\n"
        panel = load_csv(_csv(text))
        assert list(panel.extras) == ["price"]
        np.testing.assert_array_equal(panel.extras["price"][0, :2], [2.5, 2.6])
        assert np.isnan(panel.extras["price"][0, 2])

    def test_custom_schema(self, cigar_csv):
        schema = ColumnSchema(unit="state", time="year", outcome="cigsale", label="state_name")
        panel = load_csv(cigar_csv, schema)
        assert panel.units == ("3", "8", "19")
        assert panel.n_periods == 23
        assert panel.unit_labels["3"] == "California"
        assert "price" in panel.extras

    def test_missing_cell_names_unit_and_time(self):
        text = "unit,time,outcome\nA,1984,1\nA,1986,3\nB,1984,1\nB,1985,2\nB,1986,3\n"
        with pytest.raises(StructuralError) as info:
            load_csv(_csv(text))
        assert info.value.unit == "A"
        assert info.value.time == 1985
        assert "A" in str(info.value) and "1985" in str(info.value)

    def test_duplicate_cell(self):
        text = "unit,time,outcome\nA,1,1\nA,2,2\nA,2,5\nA,3,3\n"
        with pytest.raises(StructuralError, match="duplicate observation for unit A at time 2"):
            load_csv(_csv(text))

    def test_non_numeric_outcome_reports_row(self):
        text = "unit,time,outcome\nA,1,1\nA,2,oops\nA,3,3\n"
        with pytest.raises(ParseError) as info:
            load_csv(_csv(text))
        assert info.value.row == 3

    def test_unequal_spacing_reports_gap(self):
        text = "unit,time,outcome\nA,1,1\nA,2,2\nA,4,3\n"
        with pytest.raises(PanelValidationError, match="gap of 2"):
            load_csv(_csv(text))

    @pytest.mark.parametrize("missing", ["unit", "time", "outcome"])
    def test_missing_column(self, missing):
        cols = [c for c in ("unit", "time", "outcome") if c != missing]
        text = ",".join(cols) + "\n" + "1,1\n2,2\n3,3\n"
        with pytest.raises(ParseError, match=missing):
            load_csv(_csv(text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")


class TestPanelSeries:
    def test_too_short(self):
        with pytest.raises(PanelValidationError):
            PanelSeries(("A",), [1, 2], [[0.0, 1.0]])

    def test_not_increasing(self):
        with pytest.raises(PanelValidationError):
            PanelSeries(("A",), [1, 3, 2], [[0.0, 1.0, 2.0]])

    def test_non_finite_outcome(self):
        with pytest.raises(StructuralError, match="unit B at time 2"):
            PanelSeries(("A", "B"), [1, 2, 3], [[0, 1, 2], [0, np.nan, 2]])

    def test_arrays_are_read_only(self, rng):
        panel = make_panel(rng)
        with pytest.raises(ValueError):
            panel.outcomes[0, 0] = 1.0

    def test_unknown_unit(self, rng):
        panel = make_panel(rng)
        with pytest.raises(UnknownUnitError):
            panel.series("zzz")
        with pytest.raises(LookupError):
            panel.series("zzz")

    def test_observations_cover_every_cell(self, rng):
        panel = make_panel(rng, n_periods=5)
        obs = list(panel.observations())
        assert len(obs) == 4 * 5
        assert obs[0].unit == "1" and obs[0].time == 2000


class TestAggregateGroups:
    def test_mean_and_identity(self, rng):
        panel = make_panel(rng)
        treat, c1, c2 = aggregate_groups(panel, ddd_design_spec())
        np.testing.assert_array_equal(treat.series, panel.series("1"))
        np.testing.assert_allclose(c1.series, (panel.series("2") + panel.series("3")) / 2, rtol=1e-15)
        assert c1.aggregation == "mean" and treat.aggregation == "identity"
        assert c2.member_units == ("4",)

    def test_two_group_returns_none(self, rng):
        panel = make_panel(rng)
        spec = DesignSpec("1", ("2",), intervention_time=2006)
        assert aggregate_groups(panel, spec)[2] is None

    def test_member_order_invariance(self, rng):
        panel = make_panel(rng, units=tuple(str(i) for i in range(1, 8)))
        a = DesignSpec("1", ("2", "5", "3"), ("7", "4"), intervention_time=2006)
        b = DesignSpec("1", ("3", "2", "5"), ("4", "7"), intervention_time=2006)
        for ga, gb in zip(aggregate_groups(panel, a), aggregate_groups(panel, b)):
            np.testing.assert_array_equal(ga.series, gb.series)

    def test_overlap_rejected(self, rng):
        panel = make_panel(rng)
        spec = DesignSpec("1", ("2", "3"), ("3",), intervention_time=2006)
        with pytest.raises(SpecificationError, match="both"):
            aggregate_groups(panel, spec)

    def test_unknown_unit(self, rng):
        panel = make_panel(rng)
        spec = DesignSpec("1", ("2", "99"), intervention_time=2006)
        with pytest.raises(LookupError):
            aggregate_groups(panel, spec)

    def test_unit_blocks_for_pooling(self, rng):
        panel = make_panel(rng)
        blocks = unit_blocks(panel, ddd_design_spec())
        assert [b.role for b in blocks] == ["control1", "control1", "treatment", "control2"]
        assert all(b.aggregation == "none" for b in blocks)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-5, 5),
    b=st.floats(-5, 5),
    seed=st.integers(0, 2**32 - 1),
)
def test_aggregation_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    y1, y2 = rng.normal(size=(2, 3, 6))
    units = ("t", "c", "d")
    p1 = PanelSeries(units, np.arange(6), y1)
    p2 = PanelSeries(units, np.arange(6), y2)
    pc = PanelSeries(units, np.arange(6), a * y1 + b * y2)
    spec = DesignSpec("t", ("c", "d"), intervention_time=3)
    g1, g2, gc = (aggregate_groups(p, spec)[1].series for p in (p1, p2, pc))
    np.testing.assert_allclose(gc, a * g1 + b * g2, atol=1e-12)


def test_frame_columns_follow_schema(rng):
    panel = make_panel(rng)
    frame = panel.to_frame({"unit": "id", "time": "yr", "outcome": "y"})
    assert list(frame.columns) == ["id", "yr", "y"]
    assert isinstance(frame, pd.DataFrame) and len(frame) == 48
