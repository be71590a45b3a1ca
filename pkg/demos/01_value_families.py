"""Value families on a tiny event tree, with and without model ambiguity.

Builds a one-period tree by hand, equips the root with an interval of
one-step density ratios, and compares the resulting best-case value with the
classical single-measure value.
"""

from robust_snell import (
    AdaptedFamily,
    EventTree,
    NodeRecord,
    PriorSet,
    solve,
)

# one period: the root splits into an up and a down branch
tree = EventTree(
    horizon=1,
    records=[
        NodeRecord(id="r", time=0),
        NodeRecord(id="u", time=1, parent="r", q=0.5),
        NodeRecord(id="d", time=1, parent="r", q=0.5),
    ],
)
payoff = AdaptedFamily({"r": 1.0, "u": 2.0, "d": 0.0})

# the decision maker is unsure of the branch odds: any up-probability in
# [0.25, 0.75] is plausible, which in density-ratio terms is the segment
# between (1.5, 0.5) and (0.5, 1.5)
ambiguous = PriorSet.from_node_extremes({"r": [[1.5, 0.5], [0.5, 1.5]]})
reference_only = PriorSet.singleton_reference(tree)

robust = solve(tree, payoff, ambiguous)
classical = solve(tree, payoff, reference_only)

print("reward at the root:          ", payoff["r"])
print("classical value at the root: ", classical.R["r"])
print("best-case value at the root: ", robust.R["r"])
print()
print("Under ambiguity the best model tilts mass toward the high branch,")
print("so waiting is worth", robust.R["r"], "while the reference measure only offers",
      classical.R["r"], "and stopping immediately would pay", payoff["r"], "-")
print("the robust solver continues, the classical one is indifferent.")
print()
print("stop region (value touches reward):", sorted(robust.stop_region))
print("maximizing extreme per decision node:", dict(robust.argmax_extreme))
