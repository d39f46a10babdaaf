"""Exact disorder-averaged half-chain S2 of the Bose-Hubbard quench (no measurement simulation).

Used to calibrate the reduced-size MBL thresholds: prints mean S2 and its
standard error at each time for U = 0 and U = J.
"""

import argparse

import numpy as np

from renyi_probe.estimation import oracle_partial_trace
from renyi_probe.hilbert import Lattice, build_sector
from renyi_probe.models import ModelParams, build_hamiltonian
from renyi_probe.states import basis_vector, density_wave

ap = argparse.ArgumentParser()
ap.add_argument("--sites", type=int, default=8)
ap.add_argument("--particles", type=int, default=4)
ap.add_argument("--realizations", type=int, default=400)
ap.add_argument("--disorder", type=float, default=10.0)
ap.add_argument("--times", default="0,1,3,10,30,100,300,1000")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

L, N = args.sites, args.particles
basis = build_sector("boson", Lattice.chain(L), N)
psi0 = basis_vector(basis, density_wave(L, N))
times = np.array([float(t) for t in args.times.split(",")])
half = list(range(L // 2))
print("U    " + "  ".join(f"Jt={t:<8g}" for t in times))
for u in (0.0, 1.0):
    s2 = np.zeros((args.realizations, times.size))
    rng = np.random.default_rng(args.seed)
    for r in range(args.realizations):
        dis = rng.uniform(-args.disorder, args.disorder, L)
        w, v = np.linalg.eigh(build_hamiltonian(ModelParams("bose-hubbard", 1.0, u, disorder=dis), basis).matrix)
        c = v.T @ psi0
        for i, t in enumerate(times):
            s2[r, i] = -np.log(oracle_partial_trace(basis, v @ (np.exp(-1j * w * t) * c), half).purity)
    mean, se = s2.mean(axis=0), s2.std(axis=0, ddof=1) / np.sqrt(args.realizations)
    print(f"{u:<4} " + "  ".join(f"{m:.3f}+-{e:.3f}" for m, e in zip(mean, se)))
    i10, i100 = np.searchsorted(times, 10), np.searchsorted(times, 100)
    if times[i10] == 10 and i100 < times.size and times[i100] == 100:
        d = s2[:, i100] - s2[:, i10]
        print(f"     growth Jt 10 -> 100: {d.mean():+.3f} +- {d.std(ddof=1) / np.sqrt(d.size):.3f}")
