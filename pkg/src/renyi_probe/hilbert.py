"""Symmetry-sector bases and subsystem index algebra.

Configurations are integer occupation vectors. Spinful fermions use a
flattened site-then-spin layout ``(n_0up, n_0dn, n_1up, n_1dn, ...)`` so
that every species is handled by the same lexicographic machinery.
Magnetization is integer valued: ``S_z = #up - #down``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

SPECIES = ("spin-half", "boson", "fermion-spinful")


@dataclass(frozen=True)
class Lattice:
    """Open-boundary lattice; 2D sites are flattened row-major, i = ix + Lx*iy."""

    n_sites: int
    bonds: tuple[tuple[int, int], ...]
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("lattice must have at least one site")
        seen = set()
        for i, j in self.bonds:
            if i == j or not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ValueError(f"invalid bond {(i, j)}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {(i, j)}")
            seen.add(key)

    @classmethod
    def square(cls, lx: int, ly: int = 1) -> "Lattice":
        if lx < 1 or ly < 1:
            raise ValueError("lattice dimensions must be positive")
        bonds = []
        for iy in range(ly):
            for ix in range(lx):
                i = ix + lx * iy
                if ix + 1 < lx:
                    bonds.append((i, i + 1))
                if iy + 1 < ly:
                    bonds.append((i, i + lx))
        return cls(lx * ly, tuple(bonds), (lx, ly))

    @classmethod
    def chain(cls, length: int) -> "Lattice":
        return cls.square(length, 1)

    def coords(self, site: int) -> tuple[int, int]:
        lx = self.dims[0] if self.dims else self.n_sites
        return site % lx, site // lx

    def sublattice(self, subset: Sequence[int]) -> "Lattice":
        """Induced sublattice on ``subset``; sites are relabeled by their rank in the sorted subset."""
        sites = sorted(set(subset))
        if not sites:
            raise ValueError("empty subset")
        pos = {s: k for k, s in enumerate(sites)}
        for s in sites:
            if not 0 <= s < self.n_sites:
                raise ValueError(f"site {s} not in lattice")
        bonds = tuple((pos[i], pos[j]) for i, j in self.bonds if i in pos and j in pos)
        return Lattice(len(sites), bonds)

    def rectangle(self, x0: int, y0: int, lx: int, ly: int) -> list[int]:
        """Sites of an lx-by-ly rectangle with lower-left corner (x0, y0)."""
        width, height = self.dims or (self.n_sites, 1)
        if x0 < 0 or y0 < 0 or x0 + lx > width or y0 + ly > height:
            raise ValueError("rectangle exceeds lattice")
        return [(x0 + ix) + width * (y0 + iy) for iy in range(ly) for ix in range(lx)]


def _site_values(species: str, n_max: int) -> list[tuple[int, ...]]:
    if species == "spin-half":
        return [(0,), (1,)]
    if species == "boson":
        return [(n,) for n in range(n_max + 1)]
    if species == "fermion-spinful":
        return [(0, 0), (0, 1), (1, 0), (1, 1)]
    raise ValueError(f"unknown species {species!r}")


def sector_of(config, species: str):
    """Conserved quantum numbers of a configuration.

    Returns S_z for spins, N for bosons and (N, S_z) for fermions.
    ``config`` is a flat occupation vector; fermion configs may also be
    given as a sequence of (n_up, n_dn) pairs.
    """
    occ = np.asarray(config, dtype=np.int64)
    if species == "spin-half":
        n_up = int(occ.sum())
        return 2 * n_up - occ.size
    if species == "boson":
        return int(occ.sum())
    if species == "fermion-spinful":
        pairs = occ.reshape(-1, 2)
        return int(pairs.sum()), int(pairs[:, 0].sum() - pairs[:, 1].sum())
    raise ValueError(f"unknown species {species!r}")


def _check_constraint(species: str, constraint):
    if constraint is None:
        return
    if species == "fermion-spinful":
        if not (isinstance(constraint, tuple) and len(constraint) == 2):
            raise ValueError("fermion constraint must be an (N, S_z) tuple")
    elif not isinstance(constraint, (int, np.integer)):
        raise ValueError(f"{species} constraint must be an integer")


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Lexicographically ordered configurations of one symmetry sector.

    ``states`` has shape (dim, width) where width is the number of sites
    (two columns per site for spinful fermions). Lookup uses a mixed-radix
    key whose numeric order coincides with the lexicographic order.
    """

    species: str
    lattice: Lattice
    constraint: object
    n_max: int
    states: np.ndarray = field(repr=False)
    keys: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def radix(self) -> int:
        return self.n_max + 1 if self.species == "boson" else 2

    @property
    def is_empty(self) -> bool:
        return self.dim == 0

    def encode(self, configs) -> np.ndarray:
        configs = np.atleast_2d(np.asarray(configs, dtype=np.int64))
        weights = self.radix ** np.arange(configs.shape[1] - 1, -1, -1, dtype=np.int64)
        return configs @ weights

    def index_of(self, configs) -> np.ndarray:
        """Ordinals of ``configs``; -1 for configurations outside the sector."""
        keys = self.encode(configs)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, max(self.dim - 1, 0))
        found = (self.dim > 0) & (self.keys[pos] == keys) if self.dim else np.zeros(keys.shape, bool)
        return np.where(found, pos, -1)

    @property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(x) for x in s): k for k, s in enumerate(self.states)}

    def label(self) -> str:
        return sector_label(self.species, self.constraint)


def sector_label(species: str, constraint) -> str:
    if constraint is None:
        return "all"
    if species == "fermion-spinful":
        return f"N={constraint[0]};Sz={constraint[1]}"
    if species == "spin-half":
        return f"Sz={constraint}"
    return f"N={constraint}"


def _enumerate(species: str, n_sites: int, constraint, n_max: int) -> Iterator[tuple[int, ...]]:
    values = _site_values(species, n_max)
    if constraint is None:
        for combo in itertools.product(values, repeat=n_sites):
            yield tuple(itertools.chain.from_iterable(combo))
        return

    if species == "spin-half":
        # S_z = 2*n_up - L
        twice = constraint + n_sites
        if twice % 2:
            return
        targets = (twice // 2,)
    elif species == "boson":
        targets = (constraint,)
    else:
        n_tot, sz = constraint
        if (n_tot + sz) % 2:
            return
        targets = ((n_tot + sz) // 2, (n_tot - sz) // 2)
    if any(t < 0 for t in targets):
        return
    per_site_max = [max(v[k] for v in values) for k in range(len(targets))]

    def rec(site, remaining, prefix):
        if site == n_sites:
            if all(r == 0 for r in remaining):
                yield tuple(prefix)
            return
        left = n_sites - site - 1
        for v in values:
            rest = tuple(r - c for r, c in zip(remaining, _counts(species, v)))
            if any(r < 0 or r > left * m for r, m in zip(rest, per_site_max)):
                continue
            yield from rec(site + 1, rest, prefix + list(v))

    yield from rec(0, targets, [])


def _counts(species: str, v: tuple[int, ...]) -> tuple[int, ...]:
    if species == "fermion-spinful":
        return v
    return (v[0],)


def build_sector(species: str, lattice: Lattice, constraint=None, n_max: int | None = None) -> SectorBasis:
    """Enumerate the canonical basis of one symmetry sector.

    ``constraint`` is S_z (spin-half), N (boson), (N, S_z) (fermions) or
    None for the full product space. ``n_max`` caps bosonic site
    occupation; it defaults to N (uncapped). An impossible constraint
    yields an empty basis.
    """
    if species not in SPECIES:
        raise ValueError(f"unknown species {species!r}")
    _check_constraint(species, constraint)
    if species == "boson":
        if n_max is None:
            if constraint is None:
                raise ValueError("bosonic product space needs n_max")
            n_max = int(constraint)
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
    else:
        n_max = 1
    width = lattice.n_sites * (2 if species == "fermion-spinful" else 1)
    rows = list(_enumerate(species, lattice.n_sites, constraint, n_max))
    states = np.array(rows, dtype=np.int8).reshape(len(rows), width)
    states.setflags(write=False)
    basis = SectorBasis(species, lattice, constraint, n_max, states, np.zeros(0, np.int64))
    keys = basis.encode(states) if len(rows) else np.zeros(0, np.int64)
    keys.setflags(write=False)
    object.__setattr__(basis, "keys", keys)
    return basis


def all_sectors(species: str, lattice: Lattice, n_max: int | None = None, n_total: int | None = None) -> list[SectorBasis]:
    """Every nonempty sector of the product space, in ascending order of quantum numbers.

    For bosons ``n_total`` bounds the particle number (sectors 0..n_total);
    ``n_max`` defaults to ``n_total``.
    """
    L = lattice.n_sites
    if species == "spin-half":
        constraints = list(range(-L, L + 1, 2))
    elif species == "boson":
        if n_total is None:
            raise ValueError("bosonic sectors need n_total")
        constraints = list(range(n_total + 1))
        if n_max is None:
            n_max = n_total
    else:
        constraints = [(n, sz) for n in range(2 * L + 1) for sz in range(-n, n + 1, 2)]
    out = []
    for c in constraints:
        b = build_sector(species, lattice, c, n_max if species == "boson" else None)
        if b.dim:
            out.append(b)
    return out


@dataclass(frozen=True, eq=False)
class SubsystemMap:
    """Factorization of parent ordinals into (inside, outside) ordinals.

    ``inner_configs``/``outer_configs`` list the distinct sub-configurations
    in lexicographic order; ``inner``/``outer`` give, for every parent
    ordinal, the position in those lists.
    """

    parent: SectorBasis
    subset: tuple[int, ...]
    complement: tuple[int, ...]
    inner: np.ndarray
    outer: np.ndarray
    inner_configs: np.ndarray
    outer_configs: np.ndarray

    @property
    def inner_dim(self) -> int:
        return self.inner_configs.shape[0]

    @property
    def outer_dim(self) -> int:
        return self.outer_configs.shape[0]

    def compose(self, inner, outer) -> np.ndarray:
        """Parent ordinal for (inner, outer) pairs; -1 where the pair is not in the parent."""
        inner = np.asarray(inner)
        outer = np.asarray(outer)
        width = self.parent.states.shape[1]
        configs = np.zeros(inner.shape + (width,), dtype=np.int64)
        configs[..., _columns(self.parent, self.subset)] = self.inner_configs[inner]
        configs[..., _columns(self.parent, self.complement)] = self.outer_configs[outer]
        return self.parent.index_of(configs.reshape(-1, width)).reshape(inner.shape)


def _columns(basis: SectorBasis, sites: Sequence[int]) -> list[int]:
    if basis.species == "fermion-spinful":
        return [2 * s + k for s in sites for k in (0, 1)]
    return list(sites)


def subsystem_map(parent: SectorBasis, subset: Sequence[int]) -> SubsystemMap:
    sub = tuple(sorted(set(int(s) for s in subset)))
    for s in sub:
        if not 0 <= s < parent.n_sites:
            raise ValueError(f"site {s} not in parent lattice")
    comp = tuple(s for s in range(parent.n_sites) if s not in sub)
    cin = parent.states[:, _columns(parent, sub)]
    cout = parent.states[:, _columns(parent, comp)]
    inner_configs, inner = np.unique(cin, axis=0, return_inverse=True)
    outer_configs, outer = np.unique(cout, axis=0, return_inverse=True)
    return SubsystemMap(parent, sub, comp, inner.reshape(-1), outer.reshape(-1), inner_configs, outer_configs)
