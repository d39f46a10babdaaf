"""N_M needed to come within a factor of the N_M-exact error floor, per Hilbert space dimension (Haar unitaries)."""

import argparse
import math

from renyi_probe.experiments import error_scaling_table

ap = argparse.ArgumentParser()
ap.add_argument("--dims", default="16,64,256")
ap.add_argument("--n-unitaries", type=int, default=1000)
ap.add_argument("--trials", type=int, default=20)
ap.add_argument("--factor", type=float, default=2.0)
ap.add_argument("--seed", type=int, default=5)
args = ap.parse_args()

grid = [2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048, 4096, 8192, 16384]
dims = [int(d) for d in args.dims.split(",")]
table = error_scaling_table(dims, [args.n_unitaries], [None] + grid, args.trials, args.seed)
print("dim   floor     N_M*      N_M*/sqrt(dim)  N_M*/dim")
for d in dims:
    floor = next(r[4] for r in table if r[0] == d and r[2] is None)
    curve = [(r[2], r[4]) for r in table if r[0] == d and r[2] is not None]
    target = args.factor * floor
    star = math.nan
    for (n0, e0), (n1, e1) in zip(curve, curve[1:]):
        if e0 > target >= e1:
            f = math.log(e0 / target) / math.log(e0 / e1)
            star = math.exp(math.log(n0) + f * math.log(n1 / n0))
            break
    print(f"{d:<5} {floor:.5f}  {star:8.1f}  {star / math.sqrt(d):14.2f}  {star / d:8.3f}")
