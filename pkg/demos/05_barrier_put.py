"""Pricing an American knock-in barrier put under drift ambiguity.

The option only pays once the price path has crossed the barrier, so the
payoff is path dependent and lives naturally on the unrolled tree.  The
best-case hedging price grows with the ambiguity interval.
"""

from robust_snell import CrrParams, price

base = dict(S0=4.0, up=2.0, down=0.5, steps=2, rate=0.0, K=5.0, q_up=0.5)

print("barrier at the spot (knocked in from the start):")
for ambiguity in ((0.5, 0.5), (0.4, 0.6), (0.25, 0.75)):
    result = price(CrrParams(H=4.0, ambiguity=ambiguity, **base))
    print(f"  up-probability in {ambiguity}: hedging price {result.hedging_price}")

print()
print("lower barriers knock in on fewer paths and cost less:")
for barrier in (4.0, 2.0, 0.5):
    result = price(CrrParams(H=barrier, ambiguity=(0.25, 0.75), **base))
    print(f"  H = {barrier}: price {result.hedging_price}")

result = price(CrrParams(H=2.0, ambiguity=(0.25, 0.75), **base))
print()
print("with H = 2 the option knocks in only on the down branch:")
print("  exercise boundary:", list(result.exercise_boundary))
print("  maximizing up-probability per node:", dict(result.node_up_probability))
