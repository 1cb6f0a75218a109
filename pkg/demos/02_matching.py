# Instance matching on a synthetic scene: cluster, prune, split, pick, match.
from objflow.matching import MatchingParams, explain_match
from objflow.synthgen import CandidateNoiseSpec, SceneSpec, generate_scene, synthesize_candidates

_, _, truth = generate_scene(SceneSpec(object_count=8, allow_overlap=False, seed=3))

# detector-like output: noisy features, smaller duplicates, low-score false positives
noise = CandidateNoiseSpec(feature_sigma=0.02, duplicate_rate=0.5, false_positive_count=3, seed=3)
cands = synthesize_candidates(truth, noise)
print(f"{len(cands.ref)} reference and {len(cands.tgt)} target candidates")

matches, trace = explain_match(cands.ref, cands.tgt, MatchingParams())
print(trace.summary(matches))

found = sorted((r, t) for r, t, _ in matches.pairs)
print("matches agree with ground truth:", found == cands.gt_matching)

# an object that vanishes from the target frame is reported unmatched; it
# needs a second (duplicate) detection to form a cluster, a lone candidate
# is density noise and never reaches the matching step
hidden = synthesize_candidates(truth, CandidateNoiseSpec(duplicate_rate=1.0, hidden_in_target=(4,), seed=3))
m = explain_match(hidden.ref, hidden.tgt)[0]
print("unmatched reference ids:", m.unmatched_ref)
