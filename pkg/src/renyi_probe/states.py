"""Test states used by the experiments."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .estimation import oracle_partial_trace
from .hilbert import Lattice, SectorBasis, build_sector
from .measurement import BlockState


def basis_vector(basis: SectorBasis, config) -> np.ndarray:
    k = int(basis.index_of([config])[0])
    if k < 0:
        raise ValueError(f"configuration {config} not in sector {basis.label()}")
    v = np.zeros(basis.dim, dtype=complex)
    v[k] = 1.0
    return v


def antiferromagnet(lattice: Lattice) -> list[int]:
    """Checkerboard up/down pattern, site (0, 0) down."""
    return [(x + y) % 2 for x, y in map(lattice.coords, range(lattice.n_sites))]


def phase_separated(lattice: Lattice) -> list[int]:
    """Down for the left half of the columns, up for the right half."""
    lx = lattice.dims[0] if lattice.dims else lattice.n_sites
    return [0 if lattice.coords(i)[0] < lx / 2 else 1 for i in range(lattice.n_sites)]


def density_wave(n_sites: int, n_particles: int) -> list[int]:
    """Bosons on every other site starting at site 0, the rest empty."""
    occ = [0] * n_sites
    for k in range(n_particles):
        occ[(2 * k) % n_sites + (2 * k) // n_sites] += 1
    return occ


def random_state(basis: SectorBasis, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return v / np.linalg.norm(v)


def w_state(n_qubits: int) -> np.ndarray:
    """(|10..0> + |01..0> + ... + |0..01>)/sqrt(L) on the full 2**L product space, site 0 most significant."""
    v = np.zeros(2**n_qubits, dtype=complex)
    for i in range(n_qubits):
        v[1 << (n_qubits - 1 - i)] = 1.0
    return v / np.sqrt(n_qubits)


def heisenberg_test_state(name: str, lattice: Lattice, rng: np.random.Generator | None = None) -> BlockState:
    """AF, PS, rand (Haar random with S_z = 0) or mix = (AF + PS)/2, all in the S_z = 0 sector."""
    basis = build_sector("spin-half", lattice, 0)
    if name == "AF":
        return BlockState.pure(basis, basis_vector(basis, antiferromagnet(lattice)))
    if name == "PS":
        return BlockState.pure(basis, basis_vector(basis, phase_separated(lattice)))
    if name == "rand":
        return BlockState.pure(basis, random_state(basis, rng or np.random.default_rng(0)))
    if name == "mix":
        af = basis_vector(basis, antiferromagnet(lattice))
        ps = basis_vector(basis, phase_separated(lattice))
        return BlockState([basis], [np.stack([af, ps], axis=1) / np.sqrt(2)])
    raise ValueError(f"unknown test state {name!r}")


def reduced_block_state(basis: SectorBasis, state: np.ndarray, subset: Sequence[int], sub_lattice: Lattice | None = None):
    """Exact reduced state of ``subset`` split into symmetry blocks.

    Returns (BlockState, exact purity). Blocks of the subsystem are expressed
    in canonical sector bases of ``sub_lattice`` (default: a chain).
    """
    dm = oracle_partial_trace(basis, state, subset)
    blocks = dm.sector_blocks(lattice=sub_lattice)
    bs = BlockState.from_blocks([b for b, _ in blocks], [m for _, m in blocks])
    return bs, dm.purity
