# Adding a translation field to coarse pyramid levels.
import numpy as np

from objflow.core import FlowField
from objflow.flowfield import PyramidInjectionConfig, downsample_flow, inject_translation_field

# level s has 1 / 2^(s-1) the resolution and the flow magnitude
dt = FlowField.constant(256, 256, (64.0, -32.0))
for s in (1, 2, 4, 6):
    f = downsample_flow(dt, s)
    print(f"level {s}: {f.width}x{f.height}, vector {f.vectors[0, 0].tolist()}")

# a stand-in for the coarse estimates of a flow network
rng = np.random.default_rng(0)
base = {s: FlowField(rng.normal(0, 0.5, (256 >> (s - 1), 256 >> (s - 1), 2)).astype(np.float32))
        for s in (4, 5, 6)}

out = inject_translation_field(base, dt, PyramidInjectionConfig({4: 1.0, 5: 0.5, 6: 0.0}))
for s in (4, 5, 6):
    delta = out[s].vectors - base[s].vectors
    print(f"level {s}: mean added vector {delta.reshape(-1, 2).mean(axis=0).tolist()}")
print("level 6 untouched:", out[6] is base[6])
