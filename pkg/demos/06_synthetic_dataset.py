# Writing and reading a small synthetic dataset.
import math
import sys
from pathlib import Path

from objflow.synthgen import (CandidateNoiseSpec, SceneSpec, generate_scene, load_sample, sample_seeds,
                              synthesize_candidates, write_sample)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "dataset"

for i in range(3):
    scene_seed, noise_seed = sample_seeds(0, i)
    frame_ref, frame_tgt, truth = generate_scene(SceneSpec.small(seed=scene_seed))
    cands = synthesize_candidates(truth, CandidateNoiseSpec(duplicate_rate=0.3, seed=noise_seed))
    manifest = write_sample(out / f"sample_{i:04d}", (frame_ref, frame_tgt), truth, cands)
    for o in manifest["objects"]:
        print(f"sample {i} object {o['object_id']}: t = {o['translation']}, "
              f"rotation {math.degrees(o['rotation']):.1f} deg, {o['area_ref']} px")

s = load_sample(out / "sample_0000")
print("reloaded:", len(s.ref), "ref /", len(s.tgt), "tgt candidates,",
      len(s.truth.objects), "objects, files", sorted(s.manifest["files"]))
