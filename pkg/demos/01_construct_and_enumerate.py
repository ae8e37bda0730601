# Filtering a public state down to the deals that could have produced it.
#
# We self-play a small game of Oh Hell for one trick, throw away everything
# private, and ask which deals are still possible.

import numpy as np

from pbsfilter.assignment import deal_count, enumerate_assignments
from pbsfilter.construction import construct_history
from pbsfilter.enumeration import enumerate_pbs, pbs_entropy, pbs_value
from pbsfilter.estimation import generate_instance
from pbsfilter.game import GameConfig
from pbsfilter.observation import extract_constraints
from pbsfilter.policy import BiasedRandomSpec, make_policy

config = GameConfig(num_players=3, num_suits=2, num_ranks=4, hand_size=2)
spec = BiasedRandomSpec(bias=0.7, seed=0)
policy = make_policy(spec, config)

inst = generate_instance(config, spec, tricks_played=1, seed=1, policy=policy)
public = inst.public
print("trump upcard:", public.trump_upcard)
print("bids:        ", public.bids)
print("plays:       ", public.plays)

# What the public actions say about hidden hands: how many unknown cards
# each holder still has, which suits are left, and who is known void.

c = extract_constraints(public)
print("\nunknown cards per row:", c.unknown_per_row, "(last row is the kitty)")
print("unknown pool by suit: ", c.unknown_pool)
print("void mask:            ", c.void_mask)

# One consistent history, found with a max-flow over holders and suits.

h = construct_history(public, policy, np.random.default_rng(0))
print("\none consistent deal:", [sorted(hand) for hand in h.deal.hands], "kitty", sorted(h.deal.kitty))

# All of them. The suit-length assignments partition the deals, and the
# per-assignment counts add up to the number of members.

assignments = enumerate_assignments(c)
print("\nsuit-length assignments:")
for a in assignments:
    print("  ", a.entries, "->", deal_count(a, c), "deals")

pbs = enumerate_pbs(public, policy)
print("members:", len(pbs), "=", sum(deal_count(a, c) for a in assignments))

# The policy makes some deals far likelier than others.

order = np.argsort(pbs.probabilities)[::-1]
print("\nmost likely deals:")
for i in order[:5]:
    print("  ", [sorted(hand) for hand in pbs.deals[i].hands], round(float(pbs.probabilities[i]), 4))
print("entropy (bits):", round(pbs_entropy(pbs), 3), "of at most", round(np.log2(len(pbs)), 3))
print("expected scores:", np.round(pbs_value(pbs, policy), 3))
