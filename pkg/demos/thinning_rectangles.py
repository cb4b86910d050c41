"""Rectangles a x 1 thin out as a -> 0, and the Makai and Polya functionals
approach their common optimal value 1/3 + 1/(r beta).

The printed ratios should climb (ratio1) or fall (ratio2) toward 1, never
crossing the elementary floor (1 + R)^-2.
"""

from robinlab import SweepConfig
from robinlab.experiments import sweep

cfg = SweepConfig("rectangles", betas=(2.0,), params={"widths": [0.5, 0.25, 0.125, 0.0625], "height": 1.0})
rep = sweep(cfg)

print(f"{'a':>8s} {'R':>8s} {'ratio1':>9s} {'ratio2':>9s} {'floor':>9s} {'makai def/R':>12s} {'polya def/R^3':>14s}")
for t in rep.trends():
    print(
        f"{t['param']:8.4f} {t['R']:8.4f} {t['ratio1']:9.5f} {t['ratio2']:9.5f} {t['ratio_floor']:9.5f}"
        f" {t['makai_deficit_over_R']:12.5f} {t['polya_deficit_over_R3']:14.5f}"
    )
print("failures:", len(rep.failures()))
