"""Three diagonal constructions played against concrete learners."""

from limitlab import adversaries as A
from limitlab import combinators as C
from limitlab import criteria as R
from limitlab import learners as L
from limitlab import texts as T

# Gold's class: feeding the last datum again while the guess already covers the next one
M = C.finapprox_part_wrap(L.gold_part_learner())
text = A.gold_adversary(M, budget=300, n=600)
tr = L.trace(M, text)
v = R.check_weakapprox(tr, T.NATURALS, range(21), R.CheckConfig(horizon=600))
print("gold adversary: distinct data", len(set(text)), "| weakapprox on 0..20:", v.status.value)
print("  last wrong step per point:", {int(x): s for x, s in sorted(v.witness["last_disagreement"].items(),
                                                                     key=lambda kv: int(kv[0]))})

# even/odd: switch sides each time the guess commits to one
_, switches = A.evenodd_adversary(L.urec_cons_part_learner("evenodd"), 1000)
print("even/odd adversary: switches by step 1000 =", switches)

# cofinite sets: withhold a point until the learner drops it
for budget in (100, 200):
    _, out = A.cofinite_adversary(T.NATURALS, T.NATURALS, L.cofinite_learner(), budget, 1500)
    print(f"cofinite adversary (budget {budget}): {out.kind}, alternations={out.alternations}, w={out.w}")
