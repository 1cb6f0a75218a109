# Average endpoint error, magnitude bins, exclusion and dataset aggregation.
import numpy as np

from objflow.core import FlowField
from objflow.evaluation import aee, aggregate_reports, csv_table, should_exclude

rng = np.random.default_rng(0)
reports = []
for i in range(4):
    truth = rng.normal(0, 60, (64, 64, 2))
    estimate = truth + rng.normal(0, 2 + i, truth.shape)
    t = FlowField(truth)
    r = aee(FlowField(estimate), t)
    r.excluded = should_exclude(t)
    reports.append(r)
    print(f"image {i}: AEE {r.aee:.3f}, pixels per bin {r.bin_counts}")

# an image with a huge ground-truth vector is left out of the dataset numbers
huge = np.zeros((64, 64, 2)); huge[0, 0] = (2500, 0)
print("exclude 2500 px flow:", should_exclude(FlowField(huge)))

print(csv_table([("pixel-weighted", aggregate_reports(reports, "pixel")),
                 ("image-weighted", aggregate_reports(reports, "image"))]))
