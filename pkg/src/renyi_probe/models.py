"""Sector-restricted Hamiltonians for Heisenberg, Bose-Hubbard and Fermi-Hubbard models.

Energies are in units of the hopping/exchange scale and times in units of
its inverse. The Heisenberg model uses Pauli matrices,
``H = J sum_<il> sigma_i . sigma_l + sum_i delta_i sigma^z_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import Lattice, SectorBasis

KINDS = {"heisenberg": "spin-half", "bose-hubbard": "boson", "fermi-hubbard": "fermion-spinful"}

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """Model couplings.

    ``hopping`` is J (Heisenberg exchange, BH hopping) or t_F (FH hopping).
    ``disorder`` holds per-site offsets, shape (L,) or (L, 2) for spin-resolved
    FH offsets. ``bonds`` overrides the basis lattice bonds (used after
    restriction to a partition).
    """

    kind: str
    hopping: float = 1.0
    interaction: float = 0.0
    disorder: np.ndarray | None = None
    bonds: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.hopping > 0:
            raise ValueError("hopping/exchange must be positive")
        if self.interaction < 0:
            raise ValueError("interaction must be nonnegative")

    @property
    def species(self) -> str:
        return KINDS[self.kind]

    def with_disorder(self, offsets) -> "ModelParams":
        return replace(self, disorder=None if offsets is None else np.asarray(offsets, dtype=float))


@dataclass(frozen=True, eq=False)
class SectorOperator:
    basis: SectorBasis
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        m = self.matrix
        return bool(np.allclose(m, m.conj().T, atol=tol, rtol=0))

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))


def restrict_to_partition(params: ModelParams, lattice: Lattice, subset: Sequence[int]) -> ModelParams:
    """Couplings of the isolated partition: bonds with both ends inside ``subset``.

    Sites are relabeled by their rank within the sorted subset, matching
    ``Lattice.sublattice``.
    """
    sites = sorted(set(subset))
    if not sites:
        raise ValueError("empty partition")
    sub = lattice.sublattice(sites)
    disorder = None
    if params.disorder is not None:
        disorder = np.asarray(params.disorder)[sites]
    return replace(params, bonds=sub.bonds, disorder=disorder)


def disorder_columns(kind: str, basis: SectorBasis) -> np.ndarray:
    """Per-state coefficients multiplying the flattened disorder offsets.

    The diagonal disorder energy of state k is ``disorder_columns[k] @ offsets.ravel()``.
    """
    st = basis.states.astype(float)
    if kind == "heisenberg":
        return 2.0 * st - 1.0
    return st


def _check(params: ModelParams, basis: SectorBasis):
    if KINDS[params.kind] != basis.species:
        raise ValueError(f"model {params.kind!r} does not act on {basis.species!r} bases")
    if params.disorder is not None:
        d = np.asarray(params.disorder)
        want = (basis.n_sites, 2) if params.kind == "fermi-hubbard" else (basis.n_sites,)
        if d.shape != want and not (params.kind == "fermi-hubbard" and d.shape == (basis.n_sites,)):
            raise ValueError(f"disorder shape {d.shape} does not match lattice ({want})")


def _flat_disorder(params: ModelParams, n_sites: int) -> np.ndarray | None:
    if params.disorder is None:
        return None
    d = np.asarray(params.disorder, dtype=float)
    if params.kind == "fermi-hubbard" and d.ndim == 1:
        # spin-independent potential
        d = np.repeat(d[:, None], 2, axis=1)
    return d.ravel()


def _hamiltonian_terms(params: ModelParams, basis: SectorBasis):
    """Diagonal vector and (row, col, value) off-diagonal triplets."""
    st = basis.states.astype(np.int64)
    bonds = params.bonds if params.bonds is not None else basis.lattice.bonds
    J = params.hopping
    rows, cols, vals = [], [], []
    diag = np.zeros(basis.dim)

    if params.kind == "heisenberg":
        sz = 2 * st - 1
        for i, j in bonds:
            diag += J * sz[:, i] * sz[:, j]
            flip = np.nonzero(st[:, i] != st[:, j])[0]
            new = st[flip].copy()
            new[:, [i, j]] = new[:, [j, i]]
            rows.append(basis.index_of(new))
            cols.append(flip)
            vals.append(np.full(flip.size, 2.0 * J))
    elif params.kind == "bose-hubbard":
        diag += 0.5 * params.interaction * (st * (st - 1)).sum(axis=1)
        for i, j in bonds:
            for a, b in ((i, j), (j, i)):
                # a^dag_b a_a moves one boson a -> b
                src = np.nonzero(st[:, a] > 0)[0]
                new = st[src].copy()
                amp = np.sqrt(new[:, a] * (new[:, b] + 1.0))
                new[:, a] -= 1
                new[:, b] += 1
                ok = new[:, b] <= basis.n_max
                idx = np.full(src.size, -1)
                if ok.any():
                    idx[ok] = basis.index_of(new[ok])
                rows.append(idx)
                cols.append(src)
                vals.append(-J * amp)
    else:
        diag += params.interaction * (st[:, 0::2] * st[:, 1::2]).sum(axis=1)
        for i, j in bonds:
            for s in (0, 1):
                for a, b in ((2 * i + s, 2 * j + s), (2 * j + s, 2 * i + s)):
                    # c^dag_b c_a
                    src = np.nonzero((st[:, a] == 1) & (st[:, b] == 0))[0]
                    new = st[src].copy()
                    lo, hi = min(a, b), max(a, b)
                    parity = new[:, lo + 1:hi].sum(axis=1) % 2
                    new[:, a] = 0
                    new[:, b] = 1
                    rows.append(basis.index_of(new))
                    cols.append(src)
                    vals.append(-J * (1.0 - 2.0 * parity))

    flat = _flat_disorder(params, basis.n_sites)
    if flat is not None:
        diag = diag + disorder_columns(params.kind, basis) @ flat

    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
        keep = r >= 0
        r, c, v = r[keep], c[keep], v[keep]
    else:
        r = c = np.zeros(0, np.int64)
        v = np.zeros(0)
    return diag, r, c, v


def build_hamiltonian(params: ModelParams, basis: SectorBasis, sparse: bool = False):
    """Hamiltonian restricted to ``basis``; dense SectorOperator or a scipy CSR matrix."""
    _check(params, basis)
    diag, r, c, v = _hamiltonian_terms(params, basis)
    n = basis.dim
    if sparse:
        m = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
        return m + sp.diags(diag, format="csr")
    m = np.zeros((n, n))
    np.add.at(m, (r, c), v)
    m[np.diag_indices(n)] += diag
    return SectorOperator(basis, m)


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    degenerate: bool
    gap: float


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(v) > 1e-12)
    ph = v[k] / abs(v[k])
    return v / ph


def ground_state(params: ModelParams, basis: SectorBasis, dense_cap: int = 3000, tol: float = 1e-9) -> GroundState:
    """Lowest eigenvector; dense for small sectors, Lanczos (ARPACK) above ``dense_cap``.

    The phase is fixed so that the first nonzero amplitude is real positive.
    """
    if basis.dim == 0:
        raise ValueError("empty sector")
    if basis.dim <= dense_cap:
        h = build_hamiltonian(params, basis).matrix
        w, v = np.linalg.eigh(h)
        vec = v[:, 0]
        gap = w[1] - w[0] if w.size > 1 else np.inf
    else:
        h = build_hamiltonian(params, basis, sparse=True)
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(basis.dim)
        w, v = spla.eigsh(h, k=2, which="SA", v0=v0, tol=1e-12)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        vec = v[:, 0]
        gap = w[1] - w[0]
    vec = _fix_phase(vec.astype(complex))
    vec /= np.linalg.norm(vec)
    return GroundState(float(w[0]), vec, bool(gap < tol), float(gap))


def _hermitian_matrix(hamiltonian) -> np.ndarray:
    m = hamiltonian.matrix if isinstance(hamiltonian, SectorOperator) else np.asarray(hamiltonian)
    if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise ValueError("Hamiltonian is not Hermitian")
    return m


def spectral_propagator(energies: np.ndarray, vectors: np.ndarray, t: float) -> np.ndarray:
    return (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T


def propagator(hamiltonian, t: float) -> SectorOperator | np.ndarray:
    """exp(-i H t) via Hermitian eigendecomposition."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    m = _hermitian_matrix(hamiltonian)
    w, v = np.linalg.eigh(m)
    u = spectral_propagator(w, v, t)
    if isinstance(hamiltonian, SectorOperator):
        return SectorOperator(hamiltonian.basis, u)
    return u


def evolve(hamiltonian, state: np.ndarray, t) -> np.ndarray:
    """exp(-i H t) applied to ``state``; ``t`` may be a scalar or a 1D array of times.

    For an array of times the result has shape (len(t),) + state.shape.
    """
    m = _hermitian_matrix(hamiltonian)
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValueError("time must be nonnegative")
    w, v = np.linalg.eigh(m)
    coeff = v.conj().T @ np.asarray(state, dtype=complex)
    phases = np.exp(-1j * np.multiply.outer(times, w))
    if coeff.ndim == 1:
        out = (phases * coeff) @ v.T
    else:
        out = np.einsum("tk,kr,ik->tir", phases, coeff, v)
    return out
