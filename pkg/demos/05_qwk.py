"""Quadratic weighted kappa: agreement with quadratic distance penalties.

Run:  python demos/05_qwk.py
"""
import numpy as np

from delaes import qwk, weight_matrix
from delaes.corpus import ScoreRange
from delaes.metrics import expected_matrix, observed_matrix

# ---------------------------------------------------------------------------
# The weight matrix penalizes disagreement by squared rating distance, scaled
# so the extreme corners weigh exactly 1.
# ---------------------------------------------------------------------------
print("weights for a 2..4 rating scale (three ratings):")
print(weight_matrix(3))
print()

# ---------------------------------------------------------------------------
# Observed counts versus the chance-expected outer product of the two rating
# histograms (normalized to the same total mass).
# ---------------------------------------------------------------------------
scale = ScoreRange(1, 1, 3)
actual = [1, 2, 3, 1, 2, 2]
predicted = [1, 2, 3, 2, 2, 1]
print("observed pair counts:")
print(observed_matrix(actual, predicted, scale))
print("expected under independence:")
print(np.round(expected_matrix(actual, predicted, scale), 3))
print("kappa:", round(qwk(actual, predicted, scale), 4))
print()

# ---------------------------------------------------------------------------
# Landmarks: perfect agreement scores 1; independent ratings score ~0;
# systematic disagreement goes negative.
# ---------------------------------------------------------------------------
rng = np.random.default_rng(0)
wide = ScoreRange(7, 0, 30)
gold = rng.integers(0, 31, 50_000)
print("perfect agreement:      ", qwk(gold, gold, wide))
print("independent predictions:", round(qwk(gold, rng.integers(0, 31, gold.size), wide), 4))
print("inverted predictions:   ", round(qwk(gold, 30 - gold, wide), 4))
print()

# Shifting every rating and the range leaves kappa untouched; the formula
# depends only on rating distances.
small = rng.integers(0, 4, 200)
noisy = np.clip(small + rng.integers(-1, 2, small.size), 0, 3)
base = qwk(small, noisy, ScoreRange(3, 0, 3))
shifted = qwk(small + 10, noisy + 10, ScoreRange(3, 10, 13))
print("label-shift invariance:", round(base, 6), "==", round(shifted, 6))
