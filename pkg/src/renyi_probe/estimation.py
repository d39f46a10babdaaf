"""Purities and Renyi entropies from averaged outcome moments, plus the exact oracles.

Global protocol, per sector of dimension N::

    <P(s)^2> = (Tr(rho_sec)^2 + Tr(rho_sec^2)) / (N (N + 1))

Local protocol (independent Haar rotation per constituent of dimension d)::

    sum_s <P_{A'}(s)^2> = sum_{B subset A'} Tr(rho_B^2) / prod_{l in A'} (d_l + 1)

with Tr(rho_empty^2) = 1, inverted recursively over subsets.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import SectorBasis, build_sector, sector_of, subsystem_map, Lattice

NO_ORACLE = "unavailable"
CSV_COLUMNS = ("label", "estimate", "std_error", "exact")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NO_ORACLE
    return repr(float(x))


def _write_rows(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for lab, est, se, exact in rows:
            w.writerow([lab, repr(float(est)), repr(float(se)), _fmt(exact)])


# --------------------------------------------------------------------------- global


def invert_global(mean_trace, mean_moment2, sector_dim):
    """Sector purity from the unitary- and outcome-averaged second moment <P(s)^2>.

    ``mean_trace`` is the estimate of Tr(rho_sec). Vectorized over sectors.
    """
    n = np.asarray(sector_dim, dtype=float)
    if np.any(n < 1):
        raise ValueError("sector dimension must be >= 1")
    return n * (n + 1.0) * np.asarray(mean_moment2) - np.asarray(mean_trace) ** 2


def invert_global_summed(mean_trace, mean_summed_moment2, sector_dim):
    """Same inversion for the outcome-summed moment sum_s <P(s)^2>."""
    n = np.asarray(sector_dim, dtype=float)
    return invert_global(mean_trace, np.asarray(mean_summed_moment2) / n, n)


def renyi_entropy(value, n: int = 2) -> float:
    """S^(n) = log(Tr rho^n) / (1 - n); ``value`` is Tr rho^n (the purity for n = 2).

    A nonpositive input returns nan with a RuntimeWarning.
    """
    if n < 2:
        raise ValueError("Renyi order must be >= 2")
    value = float(value)
    if not value > 0:
        warnings.warn(f"Renyi entropy undefined for nonpositive Tr rho^{n} estimate {value}", RuntimeWarning)
        return math.nan
    return math.log(value) / (1 - n)


@dataclass
class PurityReport:
    labels: list[str]
    dims: list[int]
    traces: np.ndarray
    purities: np.ndarray
    purity: float
    std_error: float
    n_unitaries: int
    n_measurements: int | None
    metadata: dict = field(default_factory=dict)
    sector_std_errors: np.ndarray | None = None

    @property
    def renyi2(self) -> float:
        if not self.purity > 0:
            return math.nan
        return -math.log(self.purity)

    @property
    def renyi2_std_error(self) -> float:
        return self.std_error / self.purity if self.purity > 0 else math.nan

    @property
    def out_of_range(self) -> bool:
        return not (0 < self.purity <= 1)

    def per_sector(self) -> dict[str, tuple[float, float]]:
        return {lab: (float(t), float(p)) for lab, t, p in zip(self.labels, self.traces, self.purities)}

    def write_csv(self, path, exact_total: float | None = None, exact_sectors: Sequence[float] | None = None) -> None:
        """One row per sector plus a ``total`` row; missing oracle values are marked."""
        ses = self.sector_std_errors if self.sector_std_errors is not None else [math.nan] * len(self.labels)
        ex = list(exact_sectors) if exact_sectors is not None else [None] * len(self.labels)
        rows = list(zip(self.labels, self.purities, ses, ex))
        rows.append(("total", self.purity, self.std_error, exact_total))
        _write_rows(path, rows)


def global_purity_from_arrays(traces: np.ndarray, moments: np.ndarray, dims: Sequence[int]):
    """Total purity and jackknife standard error from per-unitary arrays.

    ``traces`` and ``moments`` have shape (N_U, n_sectors): per-unitary sector
    weights and outcome-summed second moments. Returns
    (per-sector purities, total purity, jackknife std error, mean traces).
    """
    traces = np.atleast_2d(np.asarray(traces, float))
    moments = np.atleast_2d(np.asarray(moments, float))
    dims = np.asarray(dims, float)
    n_u = traces.shape[0]
    t_mean = traces.mean(axis=0)
    m_mean = moments.mean(axis=0)
    per = invert_global_summed(t_mean, m_mean, dims)
    total = float(per.sum())
    if n_u < 2:
        return per, total, math.nan, t_mean
    t_loo = (traces.sum(axis=0) - traces) / (n_u - 1)
    m_loo = (moments.sum(axis=0) - moments) / (n_u - 1)
    tot_loo = invert_global_summed(t_loo, m_loo, dims).sum(axis=1)
    se = math.sqrt((n_u - 1) / n_u * float(np.sum((tot_loo - tot_loo.mean()) ** 2)))
    return per, total, se, t_mean


def sector_jackknife(traces: np.ndarray, moments: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    traces = np.atleast_2d(np.asarray(traces, float))
    moments = np.atleast_2d(np.asarray(moments, float))
    n_u = traces.shape[0]
    if n_u < 2:
        return np.full(traces.shape[1], math.nan)
    loo = invert_global_summed((traces.sum(axis=0) - traces) / (n_u - 1),
                               (moments.sum(axis=0) - moments) / (n_u - 1), np.asarray(dims, float))
    return np.sqrt((n_u - 1) / n_u * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))


def estimate_global(records, metadata: dict | None = None) -> PurityReport:
    """Purity report from a list of MeasurementRecords of one ensemble."""
    from .measurement import moment2_estimator, trace_estimator

    if not records:
        raise ValueError("no records")
    traces = np.array([trace_estimator(r) for r in records])
    moments = np.array([moment2_estimator(r) for r in records])
    first = records[0]
    per, total, se, t_mean = global_purity_from_arrays(traces, moments, first.dims)
    return PurityReport(list(first.labels), list(first.dims), t_mean, per, total, se, len(records),
                        None if first.exact else first.n_measurements, dict(metadata or {}),
                        sector_jackknife(traces, moments, first.dims))


# --------------------------------------------------------------------------- local


def all_subsets(n: int) -> list[tuple[int, ...]]:
    """Subsets of range(n) ordered by size, then lexicographically; starts with ()."""
    return [c for k in range(n + 1) for c in itertools.combinations(range(n), k)]


def subset_label(subset: Sequence[int]) -> str:
    return "{" + ",".join(str(i + 1) for i in subset) + "}"


def marginal_probabilities(p: np.ndarray, dims: Sequence[int], subset: Sequence[int]) -> np.ndarray:
    """Marginal outcome distribution of ``subset``; ``p`` has shape (..., prod dims)."""
    L = len(dims)
    lead = p.shape[:-1]
    t = p.reshape(lead + tuple(dims))
    drop = tuple(len(lead) + a for a in range(L) if a not in subset)
    m = t.sum(axis=drop) if drop else t
    return m.reshape(lead + (-1,))


def local_moment_arrays(data: np.ndarray, dims: Sequence[int], n_measurements: int | None = None) -> dict:
    """Per-unitary outcome-summed marginal second moments for every subset.

    ``data`` holds probabilities (``n_measurements=None``) or counts with
    shape (N_U, prod dims). Returns {subset: array of shape (N_U,)}.
    """
    from .measurement import moment_from_counts, moment_from_probabilities

    out = {}
    for sub in all_subsets(len(dims)):
        if not sub:
            out[sub] = np.ones(data.shape[0])
            continue
        m = marginal_probabilities(np.asarray(data, float), dims, sub)
        if n_measurements is None:
            out[sub] = moment_from_probabilities(m)
        else:
            out[sub] = moment_from_counts(m, n_measurements)
    return out


@dataclass
class SubsetPurityTable:
    entries: dict[tuple[int, ...], float]
    std_errors: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __getitem__(self, subset) -> float:
        return self.entries[tuple(sorted(subset))]

    def rows(self):
        for sub, v in self.entries.items():
            yield sub, v, self.std_errors.get(sub, math.nan)

    def write_csv(self, path, exact: dict | None = None) -> None:
        exact = exact or {}
        _write_rows(path, [(subset_label(sub), v, se, exact.get(sub)) for sub, v, se in self.rows()])


def _scale(sub, dims) -> float:
    return float(np.prod([dims[l] + 1 for l in sub])) if sub else 1.0


def scale_local_moments(summed: dict, dims: Sequence[int]) -> dict:
    """M(A') = prod_{l in A'} (d_l + 1) * sum_s <P_{A'}(s)^2> from outcome-summed moments."""
    return {sub: _scale(sub, dims) * np.asarray(v, float) for sub, v in summed.items()}


def invert_local(moments: dict, dims: Sequence[int]) -> SubsetPurityTable:
    """Recursive subset purities, purity(A') = M(A') - sum of purities of proper subsets of A'.

    ``moments[A']`` is the scaled moment M(A') (see ``scale_local_moments``);
    the empty subset may be omitted. Values may be arrays (e.g. per unitary).
    """
    L = len(dims)
    purity = {(): 1.0}
    for sub in all_subsets(L)[1:]:
        if sub not in moments:
            raise KeyError(f"missing moment for subset {subset_label(sub)}")
        acc = 0.0
        for k in range(len(sub)):
            for inner in itertools.combinations(sub, k):
                acc = acc + purity[inner]
        purity[sub] = np.asarray(moments[sub], float) - acc
    return SubsetPurityTable(purity)


def estimate_local(data: np.ndarray, dims: Sequence[int], n_measurements: int | None = None) -> SubsetPurityTable:
    """Local-protocol purity table with jackknife standard errors over unitaries.

    The inversion is linear in the moments, so the jackknife error equals the
    standard error of per-unitary reconstructions.
    """
    per_u = local_moment_arrays(data, dims, n_measurements)
    table = invert_local(scale_local_moments(per_u, dims), dims)
    n_u = data.shape[0]
    entries, errs = {}, {}
    for sub, vals in table.entries.items():
        vals = np.broadcast_to(np.asarray(vals, float), (n_u,))
        entries[sub] = float(vals.mean())
        errs[sub] = float(vals.std(ddof=1) / math.sqrt(n_u)) if n_u > 1 and sub else 0.0
    return SubsetPurityTable(entries, errs)


# --------------------------------------------------------------------------- oracles


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Reduced state on ``sites``; rows/columns follow ``configs`` (lexicographic)."""

    species: str
    sites: tuple[int, ...]
    configs: np.ndarray
    matrix: np.ndarray

    @property
    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))

    def is_valid(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=tol):
            return False
        if abs(np.trace(m) - 1) > tol:
            return False
        return bool(np.linalg.eigvalsh(m).min(initial=0.0) >= -tol)

    def sector_blocks(self, n_max: int | None = None, lattice: Lattice | None = None):
        """Split into symmetry blocks: list of (SectorBasis, block) in ascending sector order.

        Off-sector coherences are discarded (they vanish for symmetric states).
        """
        lat = lattice or Lattice.chain(len(self.sites))
        labels = [sector_of(c, self.species) for c in self.configs]
        keys = sorted(set(labels))
        out = []
        for key in keys:
            rows = np.array([i for i, l in enumerate(labels) if l == key])
            cap = n_max
            if self.species == "boson" and cap is None:
                cap = int(self.configs.max()) if self.configs.size else 0
                cap = max(cap, key)
            basis = build_sector(self.species, lat, key, cap if self.species == "boson" else None)
            full = np.zeros((basis.dim, basis.dim), dtype=complex)
            idx = basis.index_of(self.configs[rows])
            full[np.ix_(idx, idx)] = self.matrix[np.ix_(rows, rows)]
            out.append((basis, full))
        return out


def oracle_partial_trace(basis: SectorBasis, state: np.ndarray, subset: Sequence[int]) -> DensityMatrix:
    """Exact reduced density matrix of a vector or density matrix defined on ``basis``."""
    smap = subsystem_map(basis, subset)
    state = np.asarray(state, dtype=complex)
    din, dout = smap.inner_dim, smap.outer_dim
    if state.ndim == 1:
        psi = np.zeros((din, dout), dtype=complex)
        psi[smap.inner, smap.outer] = state
        rho = psi @ psi.conj().T
    else:
        rho = np.zeros((din, din), dtype=complex)
        for o in range(dout):
            sel = np.nonzero(smap.outer == o)[0]
            ii = smap.inner[sel]
            rho[np.ix_(ii, ii)] += state[np.ix_(sel, sel)]
    return DensityMatrix(basis.species, smap.subset, smap.inner_configs, rho)


def oracle_swap_moment(blocks, locality: str = "global", dims: Sequence[int] | None = None) -> np.ndarray | float:
    """Design-exact <P(s)^2> by contracting two virtual copies with identity and swap.

    Global: one value per block, Tr[(1 + V) rho x rho] / (N (N + 1)).
    Local: ``blocks`` is a single density matrix on the product space of
    constituents with dimensions ``dims``; returns
    Tr[prod_l (1 + V_l) rho x rho] / prod_l d_l (d_l + 1).
    """
    if locality == "global":
        if isinstance(blocks, np.ndarray):
            blocks = [blocks]
        out = []
        for rho in blocks:
            n = rho.shape[0]
            direct = np.einsum("ii,jj->", rho, rho)
            swapped = np.einsum("ij,ji->", rho, rho)
            out.append(float(np.real(direct + swapped)) / (n * (n + 1)))
        return np.array(out)
    if locality != "local":
        raise ValueError(f"unknown locality {locality!r}")
    rho = blocks[0] if isinstance(blocks, (list, tuple)) else blocks
    dims = list(dims)
    L = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    s, t_ = letters[:L], letters[L:2 * L]
    total = 0.0
    for sub in all_subsets(L):
        # copy 1: rho[s, s'], copy 2: rho[t, t']; swapped constituents exchange s' <-> t'
        sp_ = "".join(t_[l] if l in sub else s[l] for l in range(L))
        tp_ = "".join(s[l] if l in sub else t_[l] for l in range(L))
        total += float(np.real(np.einsum(f"{s}{sp_},{t_}{tp_}->", t, t)))
    return total / float(np.prod([d * (d + 1) for d in dims]))


def local_oracle_moments(rho: np.ndarray, dims: Sequence[int]) -> dict:
    """Design-exact outcome-summed marginal moments for every subset (from partial traces)."""
    out = {}
    L = len(dims)
    for sub in all_subsets(L):
        if not sub:
            out[sub] = 1.0
            continue
        r = _reduce_product(rho, dims, sub)
        sub_dims = [dims[l] for l in sub]
        summed = oracle_swap_moment(r, "local", sub_dims) * float(np.prod(sub_dims))
        out[sub] = summed
    return out


def _reduce_product(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    L = len(dims)
    t = rho.reshape(list(dims) + list(dims))
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:L])
    col = list(letters[L:2 * L])
    for l in range(L):
        if l not in keep:
            col[l] = row[l]
    out = "".join(row[l] for l in keep) + "".join(col[l] for l in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[l] for l in keep]))
    return r.reshape(d, d)


def product_purities(rho: np.ndarray, dims: Sequence[int]) -> dict:
    """Exact Tr(rho_{A'}^2) for every subset of constituents of a product-space state."""
    out = {}
    for sub in all_subsets(len(dims)):
        if not sub:
            out[sub] = 1.0
            continue
        r = _reduce_product(rho, dims, sub)
        out[sub] = float(np.real(np.einsum("ij,ji->", r, r)))
    return out


# --------------------------------------------------------------------------- error model

LOCAL_KAPPA = 0.75


@dataclass(frozen=True)
class ErrorModel:
    """|p2_est - p2| ~ (C2 + N_A / N_M) / sqrt(N_A N_U)."""

    c2: float = 1.0
    kappa: float = LOCAL_KAPPA

    def predict(self, sector_dim: int, n_unitaries: int, n_measurements: int | None = None) -> float:
        return predict_error(n_unitaries, n_measurements, sector_dim, self.c2)

    def predict_local(self, hilbert_dim: int, n_measurements: int, prefactor: float = 1.0) -> float:
        """Shot-noise dominated local-protocol error, prefactor * N_A^kappa / N_M."""
        return prefactor * hilbert_dim**self.kappa / n_measurements


def predict_error(n_unitaries: int, n_measurements: int | None, sector_dim: int, c2: float) -> float:
    """Predicted statistical error of the purity; ``n_measurements=None`` means exact probabilities."""
    if n_unitaries < 1 or sector_dim < 1:
        raise ValueError("invalid budget")
    shot = 0.0 if n_measurements is None else sector_dim / n_measurements
    return (c2 + shot) / math.sqrt(sector_dim * n_unitaries)


def fit_c2(errors, sector_dims, n_unitaries) -> float:
    """Least-squares (in log space) C2 from errors measured with exact probabilities."""
    e = np.asarray(errors, float) * np.sqrt(np.asarray(sector_dims, float) * np.asarray(n_unitaries, float))
    return float(np.exp(np.mean(np.log(e))))


def fit_local_exponent(errors, hilbert_dims, n_measurements) -> tuple[float, float]:
    """Fit error ~ a * N_A^kappa / N_M for the local protocol in the shot-noise regime; returns (kappa, a)."""
    e = np.asarray(errors, float) * np.asarray(n_measurements, float)
    kappa, log_a = np.polyfit(np.log(np.asarray(hilbert_dims, float)), np.log(e), 1)
    return float(kappa), float(np.exp(log_a))
