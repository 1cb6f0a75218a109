# Masks, IoU, run-length encoding and the two training losses.
import numpy as np

from objflow.core import BinaryMask, mask_centroid, mask_iou, rle_decode, rle_encode
from objflow.losses import feature_similarity_losses, feature_triplet_loss, mask_confirmation_loss, sample_capped

rng = np.random.default_rng(0)

# two overlapping squares on a 10x10 canvas
a = np.zeros((10, 10), bool); a[1:6, 1:6] = True
b = np.zeros((10, 10), bool); b[3:8, 3:8] = True
ma, mb = BinaryMask(a), BinaryMask(b)
print("IoU:", mask_iou(ma, mb))          # 9 / 41
print("centroids:", mask_centroid(ma), mask_centroid(mb))

counts = rle_encode(ma)
print("RLE:", counts)
assert rle_decode(counts, 10, 10) == ma

# feature losses: one anchor, up to 9 matching and 9 non-matching features
anchor = rng.normal(size=256)
same = [anchor + rng.normal(0, 0.01, 256) for _ in range(20)]
other = [rng.normal(size=256) for _ in range(20)]
sim, dis = feature_similarity_losses(anchor, sample_capped(same, rng), sample_capped(other, rng))
print(f"similarity {sim:.3f}  dissimilarity {dis:.3f}")
print("triplet loss:", feature_triplet_loss([(sim, dis)]))      # 0: well separated
print("triplet loss, collapsed:", feature_triplet_loss([(1.0, 1.0)]))  # margin 2

# mask confirmation: score should predict IoU with the true mask
print("confirmation loss:", mask_confirmation_loss([(ma, mb, 0.25), (ma, ma, 0.9)]))
