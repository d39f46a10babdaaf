"""Projective readout after a random unitary and unbiased moment estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .hilbert import SectorBasis

PROB_TOL = 1e-10


@dataclass(eq=False)
class BlockState:
    """Block-diagonal density matrix over symmetry sectors.

    Each block is stored through a factor ``W`` with ``rho_block = W W^dag``
    (a pure state is a single column), which is what the readout needs.
    """

    bases: list[SectorBasis]
    factors: list[np.ndarray]

    def __post_init__(self):
        if len(self.bases) != len(self.factors):
            raise ValueError("one factor per sector required")
        fixed = []
        for b, w in zip(self.bases, self.factors):
            w = np.asarray(w, dtype=complex)
            if w.ndim == 1:
                w = w[:, None]
            if w.shape[0] != b.dim:
                raise ValueError(f"factor rows {w.shape[0]} != sector dim {b.dim}")
            fixed.append(w)
        self.factors = fixed
        tot = sum(self.traces)
        if abs(tot - 1.0) > PROB_TOL:
            raise ValueError(f"block traces sum to {tot}, not 1")

    @classmethod
    def pure(cls, basis: SectorBasis, vector) -> "BlockState":
        v = np.asarray(vector, dtype=complex)
        return cls([basis], [v / np.linalg.norm(v)])

    @classmethod
    def from_blocks(cls, bases: Sequence[SectorBasis], blocks: Sequence[np.ndarray], tol: float = 1e-12) -> "BlockState":
        """From explicit Hermitian PSD blocks; zero blocks are dropped."""
        keep_b, keep_w = [], []
        for b, rho in zip(bases, blocks):
            rho = np.asarray(rho, dtype=complex)
            if not np.allclose(rho, rho.conj().T, atol=PROB_TOL):
                raise ValueError("block is not Hermitian")
            w, v = np.linalg.eigh(rho)
            if w.min(initial=0.0) < -PROB_TOL:
                raise ValueError("block is not positive semidefinite")
            sel = w > tol
            if not sel.any():
                continue
            keep_b.append(b)
            keep_w.append(v[:, sel] * np.sqrt(w[sel]))
        return cls(keep_b, keep_w)

    @property
    def traces(self) -> list[float]:
        return [float(np.sum(np.abs(w) ** 2)) for w in self.factors]

    @property
    def dims(self) -> list[int]:
        return [b.dim for b in self.bases]

    @property
    def labels(self) -> list[str]:
        return [b.label() for b in self.bases]

    def blocks(self) -> list[np.ndarray]:
        return [w @ w.conj().T for w in self.factors]

    def purities(self) -> list[float]:
        return [float(np.linalg.norm(w.conj().T @ w) ** 2) for w in self.factors]


def probabilities_from_factor(w: np.ndarray) -> np.ndarray:
    """Diagonal of W W^dag along the second-to-last axis; works on batches."""
    p = np.abs(w) ** 2
    return p.sum(axis=-1) if p.ndim >= 2 else p


def outcome_probabilities(state: BlockState, unitary) -> list[np.ndarray]:
    """P(s) = <s|U rho U^dag|s> per sector; ``unitary`` is a list of per-sector blocks."""
    if not isinstance(unitary, (list, tuple)):
        unitary = [unitary]
    if len(unitary) != len(state.factors):
        raise ValueError("one unitary block per sector required")
    out = []
    for u, w in zip(unitary, state.factors):
        u = getattr(u, "matrix", u)
        if u.shape != (w.shape[0], w.shape[0]):
            raise ValueError(f"unitary of shape {u.shape} does not match sector dim {w.shape[0]}")
        out.append(probabilities_from_factor(u @ w))
    return out


def sample_counts(probabilities, n_measurements: int, stream) -> np.ndarray | list[np.ndarray]:
    """Multinomial outcome counts.

    ``probabilities`` is one vector, a batch (..., n_outcomes) or a list of
    per-sector vectors (sampled jointly and split back). Probabilities are
    renormalized over the measured outcome set.
    """
    from .randomization import _rng

    if n_measurements < 1:
        raise ValueError("need at least one measurement")
    rng = _rng(stream)
    if isinstance(probabilities, (list, tuple)) and probabilities and np.ndim(probabilities[0]) == 1:
        sizes = [len(p) for p in probabilities]
        flat = np.concatenate([np.asarray(p, float) for p in probabilities])
        counts = sample_counts(flat, n_measurements, rng)
        return np.split(counts, np.cumsum(sizes)[:-1])
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(n_measurements, p)


def falling_factorial(x, n: int):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for k in range(n):
        out = out * (x - k)
    return out


def moment_from_counts(counts, n_measurements: int, n: int = 2) -> np.ndarray:
    """Unbiased estimate of sum_s P(s)^n from counts (last axis = outcomes)."""
    if n_measurements < n:
        raise ValueError(f"need at least {n} measurements for an order-{n} moment")
    c = np.asarray(counts)
    return falling_factorial(c, n).sum(axis=-1) / math.perm(n_measurements, n)


def moment_from_probabilities(p, n: int = 2) -> np.ndarray:
    return (np.asarray(p, dtype=float) ** n).sum(axis=-1)


@dataclass
class MeasurementRecord:
    """Readout of one random unitary: exact probabilities or sparse outcome counts per sector.

    ``counts`` maps sector label -> {outcome ordinal: count}; sectors that
    received no counts may be absent.
    """

    unitary_index: int
    labels: list[str]
    dims: list[int]
    probabilities: list[np.ndarray] | None = None
    counts: dict[str, dict[int, int]] | None = None
    n_measurements: int | None = None

    def __post_init__(self):
        if (self.probabilities is None) == (self.counts is None):
            raise ValueError("record holds either probabilities or counts")
        if self.probabilities is not None:
            for p in self.probabilities:
                if np.any(p < -PROB_TOL):
                    raise ValueError("negative probability")
        else:
            total = sum(sum(c.values()) for c in self.counts.values())
            if self.n_measurements is None:
                self.n_measurements = total
            if total != self.n_measurements:
                raise ValueError("counts do not sum to n_measurements")

    @property
    def exact(self) -> bool:
        return self.probabilities is not None

    @classmethod
    def from_counts(cls, unitary_index: int, labels, dims, counts_per_sector) -> "MeasurementRecord":
        sparse = {}
        for lab, c in zip(labels, counts_per_sector):
            nz = np.nonzero(c)[0]
            if nz.size:
                sparse[lab] = {int(k): int(c[k]) for k in nz}
        n = int(sum(int(np.sum(c)) for c in counts_per_sector))
        return cls(unitary_index, list(labels), list(dims), counts=sparse, n_measurements=n)

    def dense_counts(self) -> list[np.ndarray]:
        out = []
        for lab, d in zip(self.labels, self.dims):
            c = np.zeros(d, dtype=np.int64)
            for k, v in self.counts.get(lab, {}).items():
                c[k] = v
            out.append(c)
        return out


def measure(state: BlockState, unitary, unitary_index: int, n_measurements=None, stream=None) -> MeasurementRecord:
    """Readout of ``state`` after ``unitary``; ``n_measurements=None`` keeps exact probabilities."""
    probs = outcome_probabilities(state, unitary)
    if n_measurements is None:
        return MeasurementRecord(unitary_index, state.labels, state.dims, probabilities=probs)
    counts = sample_counts(probs, n_measurements, stream)
    return MeasurementRecord.from_counts(unitary_index, state.labels, state.dims, counts)


def momentn_estimator(record: MeasurementRecord, n: int) -> np.ndarray:
    """Per-sector estimate of sum_{s in sector} P(s)^n."""
    if record.exact:
        return np.array([moment_from_probabilities(p, n) for p in record.probabilities])
    N = record.n_measurements
    if N < n:
        raise ValueError(f"need at least {n} measurements for an order-{n} moment")
    denom = math.perm(N, n)
    out = []
    for lab in record.labels:
        c = np.fromiter(record.counts.get(lab, {}).values(), dtype=float)
        out.append(falling_factorial(c, n).sum() / denom)
    return np.array(out)


def moment2_estimator(record: MeasurementRecord) -> np.ndarray:
    return momentn_estimator(record, 2)


def trace_estimator(record: MeasurementRecord) -> np.ndarray:
    """Per-sector weight of one record: summed probabilities or outcome fraction."""
    if record.exact:
        return np.array([float(np.sum(p)) for p in record.probabilities])
    N = record.n_measurements
    return np.array([sum(record.counts.get(lab, {}).values()) / N for lab in record.labels])


def sector_trace_estimator(records: Sequence[MeasurementRecord]) -> np.ndarray:
    """Per-sector Tr rho estimate averaged over unitaries."""
    if not records:
        raise ValueError("no records")
    return np.mean([trace_estimator(r) for r in records], axis=0)


def write_records(records: Iterable[MeasurementRecord], path) -> None:
    """Line-oriented dump: ``unitary_index,sector_label,outcome_ordinal,value``.

    Header comments carry the mode and the sector list. ``value`` is a count
    (counts mode, nonzero entries only) or a probability (exact mode, every
    outcome listed).
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    first = records[0]
    with Path(path).open("w") as f:
        if first.exact:
            f.write("# mode=exact\n")
        else:
            f.write(f"# mode=counts n_measurements={first.n_measurements}\n")
        for lab, d in zip(first.labels, first.dims):
            f.write(f"# sector {lab} {d}\n")
        f.write("unitary_index,sector_label,outcome_ordinal,value\n")
        for r in records:
            if r.exact:
                for lab, p in zip(r.labels, r.probabilities):
                    for k, v in enumerate(p):
                        f.write(f"{r.unitary_index},{lab},{k},{float(v)!r}\n")
            else:
                for lab in r.labels:
                    for k, v in sorted(r.counts.get(lab, {}).items()):
                        f.write(f"{r.unitary_index},{lab},{k},{v}\n")


def read_records(path) -> list[MeasurementRecord]:
    """Inverse of ``write_records``."""
    labels, dims = [], []
    mode, n_meas = None, None
    data: dict[int, dict[str, dict[int, float]]] = {}
    with Path(path).open() as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# mode="):
                parts = dict(tok.split("=") for tok in line[2:].split())
                mode = parts["mode"]
                if "n_measurements" in parts:
                    n_meas = int(parts["n_measurements"])
            elif line.startswith("# sector "):
                _, _, lab, d = line.split(" ")
                labels.append(lab)
                dims.append(int(d))
            elif line.startswith("unitary_index"):
                continue
            else:
                k, lab, s, v = line.split(",")
                data.setdefault(int(k), {}).setdefault(lab, {})[int(s)] = float(v)
    if mode not in ("exact", "counts"):
        raise ValueError("missing or unknown mode header")
    out = []
    for k in sorted(data):
        if mode == "exact":
            probs = []
            for lab, d in zip(labels, dims):
                p = np.zeros(d)
                for s, v in data[k].get(lab, {}).items():
                    p[s] = v
                probs.append(p)
            out.append(MeasurementRecord(k, labels, dims, probabilities=probs))
        else:
            counts = {lab: {s: int(v) for s, v in c.items()} for lab, c in data[k].items()}
            out.append(MeasurementRecord(k, labels, dims, counts=counts, n_measurements=n_meas))
    return out
