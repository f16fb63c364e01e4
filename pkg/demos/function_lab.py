"""Learning functions from a small disciplined lab.

Prints, for each lab function that is total on the checked domain, the learner's
recurring code and the three verdicts.
"""

import json
from importlib import resources

from limitlab import functions as F
from limitlab.criteria import CheckConfig

labs = json.loads(resources.files("limitlab").joinpath("data", "labs.json").read_text())
lab = F.lab_from_json(next(d for d in labs if d["id"] == "pairs"))
cfg = CheckConfig(horizon=400)
learner = F.fj_learner(lab)

print("schedule head:", lab.schedule[:10])
for e, name in enumerate(lab.names):
    if lab.dom_len(e, lab.horizon - 1) <= cfg.domain:
        continue
    f = F.lab_function(lab, e)
    tr = F.fn_trace(learner, [f(x) for x in range(cfg.horizon)])
    d = F.least_index(lab, e, len(lab.values[e]) - 1)
    S = F.progress_log(lab, d).times
    verdicts = [F.check_fn_part(tr, f, cfg), F.check_fn_bcstar(tr, f, cfg), F.check_fulkjain(tr, f, S, cfg)]
    print(f"psi{e} ({name}), least index {d}: "
          + ", ".join(f"{v.criterion}={v.status.value}" for v in verdicts))
