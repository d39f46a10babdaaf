"""Monte Carlo glue: random unitaries -> readout -> per-unitary moment arrays.

The arrays are what the estimators reduce; keeping them per unitary makes
jackknife errors and repeated-trial error curves cheap.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimation import global_purity_from_arrays, sector_jackknife, PurityReport
from .measurement import BlockState, moment_from_counts, moment_from_probabilities, probabilities_from_factor
from .models import ModelParams
from .randomization import QuenchEnsemble, QuenchSchedule, RandomStream, haar_columns, apply_local_batch

_TAG_COUNTS = 10
_TAG_CUE = 11
_TAG_LOCAL = 12


@dataclass
class MomentArrays:
    """Per-unitary sector weights and outcome-summed second moments, shape (N_U, n_sectors)."""

    traces: np.ndarray
    moments: np.ndarray
    dims: list[int]
    labels: list[str]
    n_measurements: int | None = None

    @property
    def n_unitaries(self) -> int:
        return self.traces.shape[0]

    def purity(self) -> float:
        return global_purity_from_arrays(self.traces, self.moments, self.dims)[1]

    def report(self, metadata: dict | None = None) -> PurityReport:
        per, total, se, t_mean = global_purity_from_arrays(self.traces, self.moments, self.dims)
        return PurityReport(self.labels, self.dims, t_mean, per, total, se, self.n_unitaries,
                            self.n_measurements, dict(metadata or {}),
                            sector_jackknife(self.traces, self.moments, self.dims))

    def split(self, n_groups: int) -> list["MomentArrays"]:
        """Disjoint consecutive groups of unitaries (independent repetitions)."""
        size = self.n_unitaries // n_groups
        return [MomentArrays(self.traces[g * size:(g + 1) * size], self.moments[g * size:(g + 1) * size],
                             self.dims, self.labels, self.n_measurements) for g in range(n_groups)]


def readout(probs: Sequence[np.ndarray], n_measurements: int | None, rng: np.random.Generator | None):
    """Sector weights and second moments of one readout (exact or multinomial)."""
    if n_measurements is None:
        return (np.array([p.sum() for p in probs]), np.array([moment_from_probabilities(p) for p in probs]))
    sizes = [p.size for p in probs]
    flat = np.clip(np.concatenate(probs), 0.0, None)
    counts = rng.multinomial(n_measurements, flat / flat.sum())
    parts = np.split(counts, np.cumsum(sizes)[:-1])
    return (np.array([c.sum() / n_measurements for c in parts]),
            np.array([moment_from_counts(c, n_measurements) for c in parts]))


def _chunks(start: int, stop: int, n: int) -> list[range]:
    n = max(1, min(n, stop - start))
    edges = np.linspace(start, stop, n + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


def quench_moments(state: BlockState, params: ModelParams, schedule: QuenchSchedule, n_unitaries: int,
                   seed: int, checkpoints: Sequence[int] | None = None, n_measurements: int | None = None,
                   first_index: int = 0, threads: int = 1) -> list[MomentArrays]:
    """Moment arrays for unitaries ``first_index .. first_index + n_unitaries - 1`` of a quench ensemble.

    One MomentArrays per checkpoint (number of quenches applied).
    """
    if n_measurements is not None and n_measurements < 2:
        raise ValueError("need at least two measurements per unitary")
    ens = QuenchEnsemble(params, state.bases, schedule, seed)
    cps = [schedule.eta] if checkpoints is None else sorted(set(int(c) for c in checkpoints))
    nsec = len(state.bases)

    def work(ks: range):
        tr = np.zeros((len(cps), len(ks), nsec))
        mo = np.zeros_like(tr)
        for row, k in enumerate(ks):
            outs = ens.evolve(k, state.factors, cps)
            for c, blocks in enumerate(outs):
                probs = [probabilities_from_factor(w) for w in blocks]
                rng = None
                if n_measurements is not None:
                    rng = RandomStream(seed, (_TAG_COUNTS, k, cps[c])).generator()
                tr[c, row], mo[c, row] = readout(probs, n_measurements, rng)
        return tr, mo

    chunks = _chunks(first_index, first_index + n_unitaries, threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(ch) for ch in chunks]
    tr = np.concatenate([p[0] for p in parts], axis=1)
    mo = np.concatenate([p[1] for p in parts], axis=1)
    return [MomentArrays(tr[c], mo[c], state.dims, state.labels, n_measurements) for c in range(len(cps))]


def cue_moments(state: BlockState, n_unitaries: int, rng: np.random.Generator,
                n_measurements: int | None = None, batch: int = 2000) -> MomentArrays:
    """Moment arrays with an independent Haar unitary on every sector block.

    Only the action on the state's support is sampled: for W = Q R (thin QR),
    U W has the law of (first r columns of a Haar unitary) @ R.
    """
    nsec = len(state.bases)
    tr = np.zeros((n_unitaries, nsec))
    mo = np.zeros_like(tr)
    qr = [np.linalg.qr(w) for w in state.factors]
    done = 0
    while done < n_unitaries:
        b = min(batch, n_unitaries - done)
        probs = []
        for (q, r), dim in zip(qr, state.dims):
            cols = haar_columns(dim, r.shape[0], rng, batch=b)
            probs.append(probabilities_from_factor(cols @ r))
        if n_measurements is None:
            tr[done:done + b] = np.stack([p.sum(axis=1) for p in probs], axis=1)
            mo[done:done + b] = np.stack([moment_from_probabilities(p) for p in probs], axis=1)
        else:
            if n_measurements < 2:
                raise ValueError("need at least two measurements per unitary")
            flat = np.clip(np.concatenate(probs, axis=1), 0.0, None)
            counts = rng.multinomial(n_measurements, flat / flat.sum(axis=1, keepdims=True))
            parts = np.split(counts, np.cumsum(state.dims)[:-1], axis=1)
            tr[done:done + b] = np.stack([c.sum(axis=1) / n_measurements for c in parts], axis=1)
            mo[done:done + b] = np.stack([moment_from_counts(c, n_measurements) for c in parts], axis=1)
        done += b
    return MomentArrays(tr, mo, state.dims, state.labels, n_measurements)


def local_probabilities(factor: np.ndarray, dims: Sequence[int], n_unitaries: int,
                        rng: np.random.Generator, batch: int = 2000) -> np.ndarray:
    """Outcome distributions after u_1 x ... x u_L with Haar u_l; returns (N_U, prod dims).

    ``factor`` is W with rho = W W^dag on the product space (site 0 most significant).
    """
    d = dims[0]
    if any(x != d for x in dims):
        raise ValueError("batched local sampling needs equal local dimensions")
    L = len(dims)
    w = np.asarray(factor, complex)
    if w.ndim == 1:
        w = w[:, None]
    out = np.zeros((n_unitaries, d**L))
    done = 0
    while done < n_unitaries:
        b = min(batch, n_unitaries - done)
        us = haar_columns(d, d, rng, batch=b * L).reshape(b, L, d, d)
        out[done:done + b] = probabilities_from_factor(apply_local_batch(us, w))
        done += b
    return out


def local_counts(probs: np.ndarray, n_measurements: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    return rng.multinomial(n_measurements, p / p.sum(axis=1, keepdims=True))


def mean_abs_error(estimates, exact: float) -> tuple[float, float]:
    """Mean |estimate - exact| and its standard error over repetitions."""
    e = np.abs(np.asarray(estimates, float) - exact)
    se = float(e.std(ddof=1) / math.sqrt(e.size)) if e.size > 1 else math.nan
    return float(e.mean()), se
