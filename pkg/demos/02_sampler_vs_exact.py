# Does the Metropolis-Hastings chain land on the right distribution?
#
# Take a state after the bidding round only (a few hundred members), run the
# chain, and compare its visit frequencies to the exact reach-weighted
# probabilities.

from collections import Counter

import numpy as np

from pbsfilter.enumeration import enumerate_pbs
from pbsfilter.estimation import generate_instance
from pbsfilter.game import GameConfig
from pbsfilter.gibbs import GibbsSampler, derive_rng
from pbsfilter.policy import BiasedRandomSpec, make_policy

config = GameConfig(3, 2, 4, 2)
spec = BiasedRandomSpec(0.7, 0)
policy = make_policy(spec, config)

inst = generate_instance(config, spec, 0, 3, policy)
pbs = enumerate_pbs(inst.public, policy)
print("bids", inst.public.bids, "leave", len(pbs), "deals")

sampler = GibbsSampler(inst.public, policy)
rng = derive_rng(0)
state = sampler.init_chain("construct", rng)

# Total variation to the exact distribution as the chain gets longer.

counts = Counter()
checkpoints = [10**3, 10**4, 10**5, 3 * 10**5]
done = 0
for stop in checkpoints:
    while done < stop:
        state = sampler.step(state, rng)
        counts[state.deal] += 1
        done += 1
    freq = np.array([counts[d] for d in pbs.deals]) / done
    tv = 0.5 * np.abs(freq - pbs.probabilities).sum()
    print(f"{done:>7} transitions  TV {tv:.4f}  acceptance {sampler.accepted / sampler.transitions:.3f}")

# Top members side by side.

top = np.argsort(pbs.probabilities)[::-1][:8]
print("\n  exact   chain")
for i in top:
    print(f"  {pbs.probabilities[i]:.4f}  {counts[pbs.deals[i]] / done:.4f}")
