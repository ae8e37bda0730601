# Estimating the value of a belief state three ways.
#
#   true:       draw members from the exact distribution (needs the oracle)
#   importance: draw members uniformly, weight by reach
#   gibbs:      run the chain, keep every k-th state
#
# Error is the largest per-player gap to the exact value, averaged over runs.

import csv
import io

from pbsfilter.estimation import SIZE_REGIMES, exact_reference, generate_instance, sweep
from pbsfilter.policy import BiasedRandomSpec, make_policy

config, tricks = SIZE_REGIMES["12960"]
spec = BiasedRandomSpec(0.7, 0)
policy = make_policy(spec, config)
ref = exact_reference(generate_instance(config, spec, tricks, 0, policy), policy)
print(len(ref.pbs), "deals, exact value", ref.value.round(3))

text = sweep(ref, methods=["true", "importance", "gibbs"], sample_grid=[10, 50, 200],
             thinning_grid=[20], replicates=30, seed=0)

print("\nmethod      samples  error")
for row in csv.DictReader(io.StringIO(text)):
    print(f"{row['method']:<11} {row['samples']:>7}  {float(row['error_mean']):.3f} +- {float(row['error_sem']):.3f}")

# At a fixed transition budget, more frequent samples beat longer gaps.

budget = 2000
text = sweep(ref, methods=["gibbs"], sample_grid=[budget // 5, budget // 80],
             thinning_grid=[5, 80], replicates=30, seed=1)
print("\nthinning  samples  error")
for row in csv.DictReader(io.StringIO(text)):
    if int(row["transitions"]) == budget:
        print(f"{row['thinning']:>8} {row['samples']:>8}  {float(row['error_mean']):.3f}")
