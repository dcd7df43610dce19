import numpy as np
import pytest

from ddditsa import DesignError, DesignSpec, SpecificationError, aggregate_groups, build_design
from ddditsa.design import (
    COLUMNS,
    _check_rank,
    coefficient_names,
    intervention_index,
    stata_names,
)
from ddditsa.panel import GroupedSeries

from conftest import ddd_design_spec, make_panel


@pytest.fixture
def groups(rng):
    return aggregate_groups(make_panel(rng), ddd_design_spec())


class TestDesignSpec:
    @pytest.mark.parametrize(
        "c1, c2, kind, k",
        [((), (), "SG", 4), (("2",), (), "MG", 8), (("2",), ("3",), "DDD", 12)],
    )
    def test_kind(self, c1, c2, kind, k):
        spec = DesignSpec("1", c1, c2, intervention_time=5)
        assert spec.kind == kind and spec.n_coef == k

    def test_control2_needs_control1(self):
        with pytest.raises(SpecificationError):
            DesignSpec("1", (), ("3",), intervention_time=5)

    @pytest.mark.parametrize("lag", [-1, 1.5])
    def test_bad_lag(self, lag):
        with pytest.raises(SpecificationError):
            DesignSpec("1", intervention_time=5, hac_lag=lag)

    def test_dict_round_trip(self):
        spec = ddd_design_spec(lag=2, interaction_origin=1)
        assert DesignSpec.from_dict(spec.to_dict()) == spec

    def test_integer_units_are_normalised(self):
        spec = DesignSpec(3, (8, 19), (4,), intervention_time=1989)
        assert spec.treat_units == ("3",)
        assert spec.control1_units == ("8", "19")


class TestBuildDesign:
    def test_shape_and_columns(self, groups):
        d = build_design(groups, ddd_design_spec())
        assert d.shape == (36, 12)
        assert d.columns == COLUMNS
        assert list(d.roles[::12]) == ["control1", "treatment", "control2"]

    def test_regressor_values(self, groups):
        d = build_design(groups, ddd_design_spec(intervention=2006))
        X = d.X
        T = np.arange(12)
        step = (T >= 6).astype(float)
        for b, (z1, z2) in enumerate([(0, 0), (1, 0), (0, 1)]):
            rows = X[12 * b : 12 * (b + 1)]
            np.testing.assert_array_equal(rows[:, 0], 1.0)
            np.testing.assert_array_equal(rows[:, 1], T)
            np.testing.assert_array_equal(rows[:, 2], step)
            np.testing.assert_array_equal(rows[:, 3], step * (T - 6))
            np.testing.assert_array_equal(rows[:, 4:8], z1 * rows[:, :4])
            np.testing.assert_array_equal(rows[:, 8:12], z2 * rows[:, :4])

    def test_interaction_origin_shifts_post_clock(self, groups):
        d = build_design(groups, ddd_design_spec(interaction_origin=1))
        xt = d.X[:12, 3]
        assert xt[6] == 1.0 and xt[5] == 0.0 and xt[-1] == 6.0

    def test_deterministic(self, groups):
        spec = ddd_design_spec()
        a, b = build_design(groups, spec), build_design(groups, spec)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_input_order_of_groups_does_not_matter(self, groups):
        spec = ddd_design_spec()
        a = build_design(groups, spec)
        b = build_design(groups[::-1], spec)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)

    def test_missing_group(self, groups):
        with pytest.raises(SpecificationError):
            build_design(groups[:2], ddd_design_spec())

    def test_rank_deficiency_names_columns(self):
        # with 2+ points per segment the design is always full rank, so
        # append a column that duplicates T + Z1T and check the diagnosis
        t = np.arange(6)
        g = [GroupedSeries(r, t, np.ones(6), ("u",), "identity") for r in ("treatment", "control1")]
        X = build_design(g, DesignSpec("u", ("v",), intervention_time=4)).X
        assert np.linalg.matrix_rank(X) == 8
        with pytest.raises(DesignError) as info:
            _check_rank(np.column_stack([X, X[:, 1] + X[:, 5]]), (*COLUMNS[:8], "dup"))
        assert {"dup", "T", "Z1T"} <= set(info.value.columns)

    def test_csv_export(self, groups):
        text = build_design(groups, ddd_design_spec()).to_csv()
        header = text.splitlines()[0].split(",")
        assert header[:4] == ["role", "block", "time", "y"] and header[4:] == list(COLUMNS)


class TestInterventionIndex:
    times = np.arange(1970, 2001)

    def test_position(self):
        assert intervention_index(self.times, 1989) == 19

    @pytest.mark.parametrize("t", [1960, 1971, 2000, 1989.5])
    def test_out_of_range(self, t):
        with pytest.raises(SpecificationError, match="valid range is 1972 to 1999"):
            intervention_index(self.times, t)

    def test_message_uses_plain_years(self):
        with pytest.raises(SpecificationError, match="intervention time 1960 "):
            intervention_index(self.times, 1960.0)


class TestNames:
    def test_stata_names(self):
        spec = DesignSpec(3, (8, 19), (4,), intervention_time=1989)
        names = stata_names(spec)
        assert names[:4] == ["_cons", "_t", "_x1989", "_x_t1989"]
        assert names[7] == "_z1_x_t1989" and names[11] == "_z2_x_t1989"

    @pytest.mark.parametrize("c1, c2, k", [((), (), 4), (("2",), (), 8), (("2",), ("3",), 12)])
    def test_coefficient_names_length(self, c1, c2, k):
        names = coefficient_names(DesignSpec("1", c1, c2, intervention_time=5))
        assert [n for n, _ in names] == [f"b{j}" for j in range(k)]
