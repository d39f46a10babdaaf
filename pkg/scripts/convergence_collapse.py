"""Error of the AF state vs eta/L for several chain lengths, next to the Haar plateau of the same budget."""

import argparse

import numpy as np

from renyi_probe.hilbert import Lattice
from renyi_probe.models import ModelParams
from renyi_probe.randomization import QuenchSchedule
from renyi_probe.simulate import cue_moments, mean_abs_error, quench_moments
from renyi_probe.states import heisenberg_test_state

ap = argparse.ArgumentParser()
ap.add_argument("--sizes", default="4,6,8")
ap.add_argument("--n-unitaries", type=int, default=500)
ap.add_argument("--reps", type=int, default=8)
ap.add_argument("--max-ratio", type=int, default=5)
ap.add_argument("--seed", type=int, default=3)
args = ap.parse_args()

ratios = [0.5] + list(range(1, args.max_ratio + 1))
print("L    plateau  " + "  ".join(f"eta/L={r:<4}" for r in ratios))
for L in map(int, args.sizes.split(",")):
    state = heisenberg_test_state("AF", Lattice.chain(L))
    cps = sorted({max(1, int(r * L)) for r in ratios})
    arrays = quench_moments(state, ModelParams("heisenberg"), QuenchSchedule(eta=max(cps)),
                            args.n_unitaries * args.reps, args.seed + L, checkpoints=cps)
    errs = [mean_abs_error([g.purity() for g in a.split(args.reps)], 1.0)[0] for a in arrays]
    cue = cue_moments(state, args.n_unitaries * 50, np.random.default_rng(args.seed))
    plateau = mean_abs_error([g.purity() for g in cue.split(50)], 1.0)[0]
    print(f"{L:<4} {plateau:.5f}  " + "  ".join(f"{e:<10.5f}" for e in errs))
