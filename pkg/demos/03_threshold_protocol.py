# Why the threshold must come from a holdout: the valid protocol picks it
# on validation data and carries it to test; the invalid protocol picks it
# on the test set itself and overstates TPR, badly so at low FPR targets.

from lowfpr.data import filter_split
from lowfpr.protocol import relative_error_curve
from lowfpr.synth import default_scenario, generate

data = generate(default_scenario(seed=0))
val = filter_split(data, "validation")
test = filter_split(data, "test")
print(f"validation {len(val)} samples, test {len(test)} samples")
print()

targets = [1e-2, 1e-3, 1e-4, 1e-5]
points = relative_error_curve(val, test, targets)

print(f"{'target':>8} {'valid tpr':>10} {'valid fpr':>10} {'invalid tpr':>12} {'rel error':>10}")
for p in points:
    err = "n/a" if p.rel_error is None else f"{p.rel_error:.4f}"
    print(f"{p.target_fpr:>8g} {p.valid_tpr:>10.4f} {p.valid_actualized_fpr:>10.6f} {p.invalid_tpr:>12.4f} {err:>10}")

print()
print("the invalid protocol's optimism grows as the budget tightens;")
print("below ~100 expected false positives the valid estimate is mostly noise")
