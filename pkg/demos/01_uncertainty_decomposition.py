# Decomposing ensemble disagreement into aleatoric and epistemic parts.

import numpy as np

from lowfpr.analysis import HistogramSpec, histogram
from lowfpr.data import filter_split
from lowfpr.synth import SynthConfig, generate
from lowfpr.uncertainty import binary_entropy, compute_uncertainties, uncertainty_triple

# ## Single samples

# Five members that all agree: the prediction is uncertain (p near 0.5)
# but the members are unanimous, so everything is aleatoric.
agree = uncertainty_triple([0.55, 0.55, 0.55, 0.55, 0.55])
print("unanimous members  ", agree)

# Total disagreement: the mean is 0.5 but every member is confident.
# All of the entropy is epistemic.
disagree = uncertainty_triple([1.0, 0.0, 1.0, 0.0])
print("opposed members    ", disagree)

mixed = uncertainty_triple([0.9, 0.6, 0.8, 0.3, 0.7])
print("mixed members      ", mixed)
print("identity holds:", abs(mixed.epistemic - (mixed.predictive_entropy - mixed.aleatoric)) < 1e-12)
print("entropy ceiling  ln 2 =", binary_entropy(0.5))

# ## A whole dataset

# High member noise inflates disagreement, so epistemic uncertainty
# separates the noisy cluster from the quiet one.
config = SynthConfig(
    n_benign=5000,
    n_malicious=5000,
    member_noise_sd_base=0.3,
    member_noise_sd_novel=2.0,
    ambiguous_malicious_fraction=0.3,
    seed=7,
)
table = compute_uncertainties(filter_split(generate(config), "test"))
print()
print(f"{len(table)} test samples")
print("mean predictive entropy", round(float(table.predictive_entropy.mean()), 4))
print("mean aleatoric         ", round(float(table.aleatoric.mean()), 4))
print("mean epistemic         ", round(float(table.epistemic.mean()), 4))

# The epistemic histogram is bimodal: quiet core, noisy subpopulation.
result = histogram(table.epistemic, HistogramSpec(bin_count=10))
print()
print("epistemic histogram over [0, ln 2]")
for k, count in enumerate(result.values):
    lo, hi = result.edges[k], result.edges[k + 1]
    print(f"  [{lo:.3f}, {hi:.3f})  {'#' * int(np.ceil(50 * count / result.values.max()))} {count}")
