"""
What the three-group segmented regression actually looks like.

Run with ``python demos/01_design_matrix.py``.
"""
import numpy as np

from ddditsa import DesignSpec, PanelSeries, aggregate_groups, build_design
from ddditsa.design import coefficient_names

# Three tiny series, 8 periods each, intervention at the 5th period.
times = np.arange(2001, 2009)
panel = PanelSeries(
    ("treated", "c1a", "c1b", "c2"),
    times,
    np.array(
        [
            [10, 11, 12, 13, 11, 10, 9, 8],
            [9, 10, 11, 12, 13, 14, 15, 16],
            [11, 12, 13, 14, 15, 16, 17, 18],
            [12, 12, 13, 13, 14, 14, 15, 15],
        ],
        dtype=float,
    ),
)

spec = DesignSpec("treated", ("c1a", "c1b"), ("c2",), intervention_time=2005, hac_lag=1)

# Control 1 has two members, so its series is their per-period mean.
treat, c1, c2 = aggregate_groups(panel, spec)
print("control 1 series:", c1.series, f"({c1.aggregation} of {c1.member_units})")

design = build_design((treat, c1, c2), spec)
print("design shape:", design.shape)  # 3 blocks x 8 periods, 12 columns

# Rows come in blocks: control 1, treatment, control 2.
np.set_printoptions(linewidth=140)
print(" ".join(f"{c:>5}" for c in design.columns))
for row in design.X[[0, 4, 8, 12, 16, 20]]:
    print(" ".join(f"{v:5.0f}" for v in row))

# T starts at 0, X switches on at 2005 and XT counts periods since then.
# Z1 marks the treated block, Z2 the second control block.
for key, meaning in coefficient_names(spec):
    print(f"{key:>4}: {meaning}")
