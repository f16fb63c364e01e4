"""Wrap a partial learner for the Gold class so that it also approximates finite sets.

Runs the wrapped learner on a few targets and prints the Part and FinApprox verdicts,
then shows where the unwrapped learner stands on the same texts.
"""

from limitlab import combinators as C
from limitlab import criteria as R
from limitlab import learners as L
from limitlab import texts as T

HORIZON = 600
cfg = R.CheckConfig(horizon=HORIZON)

for target in (T.NATURALS, T.segment(2), T.segment(7)):
    text = T.seeded_text(target, seed=1, n=HORIZON)
    for learner in (L.gold_part_learner(), C.finapprox_part_wrap(L.gold_part_learner())):
        tr = L.trace(learner, text)
        part = R.check_part(tr, target, cfg)
        fa = R.check_finapprox(tr, target, range(6), cfg)
        print(f"{target.name:<8} {learner.id:<34} part={part.status.value:<12} "
              f"finapprox(0..5)={fa.status.value:<12} candidate={part.witness.get('candidate', '-')}")
