import numpy as np
import pytest
from hypothesis import given, strategies as st

from renyi_probe.hilbert import Lattice, all_sectors, build_sector
from renyi_probe.models import (ModelParams, build_hamiltonian, evolve, ground_state, propagator,
                                restrict_to_partition)

PAULI = {"x": np.array([[0, 1], [1, 0]]), "y": np.array([[0, -1j], [1j, 0]]), "z": np.array([[1, 0], [0, -1]])}


def kron_heisenberg(L, bonds, J=1.0, fields=None):
    """Full-space Heisenberg Hamiltonian from Kronecker products; basis bit 1 = up = sigma^z +1."""
    # the package maps s=1 -> sigma^z = +1 and orders site 0 most significant, which in
    # the standard |0>=up convention needs the bit flip below
    def op(site, p):
        mats = [np.eye(2)] * L
        mats[site] = PAULI[p]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out
    H = np.zeros((2**L, 2**L), complex)
    for i, j in bonds:
        for p in "xyz":
            H += J * op(i, p) @ op(j, p)
    if fields is not None:
        for i, f in enumerate(fields):
            H += f * op(i, "z")
    flip = 2**L - 1 - np.arange(2**L)
    return H[np.ix_(flip, flip)]


def test_two_spin_heisenberg_spectrum():
    b = build_sector("spin-half", Lattice.chain(2), 0)
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("heisenberg", 1.0), b).matrix)
    assert np.allclose(w, [-3.0, 1.0])


def test_full_space_matches_kronecker_construction(rng):
    lat = Lattice.square(2, 2)
    fields = rng.normal(size=4)
    H = build_hamiltonian(ModelParams("heisenberg", 0.7, disorder=fields), build_sector("spin-half", lat)).matrix
    assert np.allclose(H, kron_heisenberg(4, lat.bonds, 0.7, fields))


def test_two_site_bose_hubbard_ground_energy():
    b = build_sector("boson", Lattice.chain(2), 2)
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("bose-hubbard", 1.0, 0.0), b).matrix)
    assert w[0] == pytest.approx(-2.0)


def test_bose_hubbard_interaction_diagonal():
    b = build_sector("boson", Lattice.chain(3), 3)
    H = build_hamiltonian(ModelParams("bose-hubbard", 1.0, 2.0), b).matrix
    st_ = b.states.astype(float)
    assert np.allclose(np.diag(H), (st_ * (st_ - 1)).sum(axis=1))


def test_fermi_hubbard_free_spectrum():
    b = build_sector("fermion-spinful", Lattice.chain(2))
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("fermi-hubbard", 1.0, 0.0), b).matrix)
    # occupations of two single-particle levels (-1, +1) per spin
    expected = sorted(sum(c) for c in __import__("itertools").product(*[[0, e] for e in (-1, -1, 1, 1)]))
    assert np.allclose(w, expected)


def test_fermi_hubbard_two_site_half_filling():
    # singlet ground energy of the 2-site Hubbard model: (U - sqrt(U^2 + 16 t^2)) / 2
    U, t = 4.0, 1.0
    b = build_sector("fermion-spinful", Lattice.chain(2), (2, 0))
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("fermi-hubbard", t, U), b).matrix)
    assert w[0] == pytest.approx((U - np.sqrt(U**2 + 16 * t**2)) / 2)


def test_fermion_signs_free_ring_free_chain(rng):
    # U=0 many-body spectrum equals sums of single-particle energies only with correct signs
    lat = Lattice.square(2, 2)
    h1 = np.zeros((4, 4))
    for i, j in lat.bonds:
        h1[i, j] = h1[j, i] = -1.0
    eps = np.linalg.eigvalsh(h1)
    b = build_sector("fermion-spinful", lat, (3, 1))
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("fermi-hubbard", 1.0, 0.0), b).matrix)
    import itertools
    expected = sorted(sum(eps[list(u)]) + eps[d] for u in itertools.combinations(range(4), 2) for d in range(4))
    assert np.allclose(w, expected)


@pytest.mark.parametrize("kind,species,constraint", [
    ("heisenberg", "spin-half", 0), ("bose-hubbard", "boson", 3), ("fermi-hubbard", "fermion-spinful", (3, 1))])
def test_disorder_adds_only_diagonal(kind, species, constraint, rng):
    lat = Lattice.chain(3)
    b = build_sector(species, lat, constraint)
    shape = (3, 2) if kind == "fermi-hubbard" else (3,)
    d = rng.normal(size=shape)
    clean = build_hamiltonian(ModelParams(kind, 1.0, 0.5), b).matrix
    dirty = build_hamiltonian(ModelParams(kind, 1.0, 0.5, disorder=d), b).matrix
    diff = dirty - clean
    assert np.allclose(diff, np.diag(np.diag(diff)))
    st_ = b.states.astype(float)
    if kind == "heisenberg":
        expected = (2 * st_ - 1) @ d
    else:
        expected = st_ @ d.ravel()
    assert np.allclose(np.diag(diff), expected)


def test_species_mismatch_rejected():
    with pytest.raises(ValueError):
        build_hamiltonian(ModelParams("heisenberg"), build_sector("boson", Lattice.chain(2), 1))


def test_restrict_to_partition():
    lat = Lattice.square(4, 4)
    p = restrict_to_partition(ModelParams("heisenberg"), lat, lat.rectangle(0, 0, 2, 2))
    assert len(p.bonds) == 4
    chain = Lattice.chain(8)
    assert len(restrict_to_partition(ModelParams("heisenberg"), chain, [0, 1, 2, 3]).bonds) == 3
    single = restrict_to_partition(ModelParams("heisenberg"), chain, [5])
    H = build_hamiltonian(single, build_sector("spin-half", Lattice.chain(1))).matrix
    assert np.allclose(H, np.diag(np.diag(H)))
    with pytest.raises(ValueError):
        restrict_to_partition(ModelParams("heisenberg"), chain, [])


def test_ground_state_singlet():
    b = build_sector("spin-half", Lattice.chain(2), 0)
    g = ground_state(ModelParams("heisenberg"), b)
    # states ordered (0,1),(1,0): singlet (|01> - |10>)/sqrt(2) with first amplitude positive
    assert np.allclose(g.vector, np.array([1, -1]) / np.sqrt(2))
    assert g.energy == pytest.approx(-3.0)
    assert not g.degenerate


def test_ground_state_disorder_dominated():
    b = build_sector("spin-half", Lattice.chain(4), 0)
    d = np.array([50.0, -50.0, 50.0, -50.0])
    g = ground_state(ModelParams("heisenberg", 1.0, disorder=d), b)
    k = int(np.argmax(np.abs(g.vector)))
    assert tuple(b.states[k]) == (0, 1, 0, 1)
    assert abs(g.vector[k]) > 0.99


PLAQUETTE_ENERGY = -8.0  # 4-site ring, S.S ground energy -2, sigma = 2 S


def test_ground_state_plaquette_matches_brute_force():
    lat = Lattice.square(2, 2)
    full = np.linalg.eigvalsh(kron_heisenberg(4, lat.bonds))
    g = ground_state(ModelParams("heisenberg"), build_sector("spin-half", lat, 0))
    assert g.energy == pytest.approx(full[0])
    assert g.energy == pytest.approx(PLAQUETTE_ENERGY)


def test_ground_state_flags_degeneracy():
    b = build_sector("spin-half", Lattice.chain(3), 1)
    g = ground_state(ModelParams("heisenberg"), b)
    # three spins in a chain: ground doublet is split by nothing inside one S_z sector
    w = np.linalg.eigvalsh(build_hamiltonian(ModelParams("heisenberg"), b).matrix)
    assert g.degenerate == bool(w[1] - w[0] < 1e-9)


def test_iterative_ground_state_agrees_with_dense():
    b = build_sector("spin-half", Lattice.square(3, 2), 0)
    p = ModelParams("heisenberg")
    dense = ground_state(p, b)
    lanczos = ground_state(p, b, dense_cap=1)
    assert lanczos.energy == pytest.approx(dense.energy, abs=1e-9)
    assert abs(np.vdot(dense.vector, lanczos.vector)) == pytest.approx(1.0, abs=1e-8)


def test_propagator_identity_at_zero():
    b = build_sector("spin-half", Lattice.chain(4), 0)
    H = build_hamiltonian(ModelParams("heisenberg"), b)
    assert np.allclose(propagator(H, 0.0).matrix, np.eye(b.dim))


def test_eigenstate_acquires_only_phase():
    b = build_sector("spin-half", Lattice.chain(4), 0)
    H = build_hamiltonian(ModelParams("heisenberg"), b)
    g = ground_state(ModelParams("heisenberg"), b)
    out = evolve(H, g.vector, 2.3)
    assert abs(np.vdot(g.vector, out)) == pytest.approx(1.0, abs=1e-12)


def test_singlet_triplet_oscillation():
    # |01> = (|T0> + |S>)/sqrt2 oscillates with period 2 pi / gap, gap = 4 J
    b = build_sector("spin-half", Lattice.chain(2), 0)
    H = build_hamiltonian(ModelParams("heisenberg", 1.0), b)
    psi = np.array([1.0, 0.0])
    ts = np.linspace(0, 2, 41)
    out = evolve(H, psi, ts)
    assert np.allclose(np.abs(out[:, 0]) ** 2, np.cos(2.0 * ts) ** 2)
    assert abs(evolve(H, psi, np.pi / 2)[0]) == pytest.approx(1.0)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        evolve(np.array([[0, 1], [0, 0]]), np.array([1, 0]), 1.0)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["heisenberg", "bose-hubbard", "fermi-hubbard"]))
def test_random_hamiltonians_hermitian_and_unitary(seed, kind):
    rng = np.random.default_rng(seed)
    lat = Lattice.square(2, 2)
    species, c, shape = {"heisenberg": ("spin-half", 0, (4,)), "bose-hubbard": ("boson", 3, (4,)),
                         "fermi-hubbard": ("fermion-spinful", (3, 1), (4, 2))}[kind]
    b = build_sector(species, lat, c)
    p = ModelParams(kind, rng.uniform(0.1, 2), rng.uniform(0, 3), disorder=rng.normal(size=shape))
    H = build_hamiltonian(p, b)
    assert H.is_hermitian()
    U = propagator(H, rng.uniform(0, 5))
    assert U.is_unitary()
    assert abs(abs(np.linalg.det(U.matrix)) - 1) < 1e-8


@given(st.integers(0, 2**31 - 1))
def test_energy_and_norm_conserved(seed):
    rng = np.random.default_rng(seed)
    b = build_sector("boson", Lattice.chain(4), 3)
    H = build_hamiltonian(ModelParams("bose-hubbard", 1.0, 1.0, disorder=rng.normal(size=4)), b).matrix
    psi = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
    psi /= np.linalg.norm(psi)
    e0 = np.vdot(psi, H @ psi).real
    for t in (0.3, 4.0, 17.0):
        phi = evolve(H, psi, t)
        assert np.linalg.norm(phi) == pytest.approx(1.0, abs=1e-10)
        assert np.vdot(phi, H @ phi).real == pytest.approx(e0, abs=1e-9)


@pytest.mark.parametrize("L", [2, 3, 4, 5, 6])
def test_heisenberg_commutes_with_sz(L):
    lat = Lattice.chain(L)
    full = np.linalg.eigvalsh(build_hamiltonian(ModelParams("heisenberg"), build_sector("spin-half", lat)).matrix)
    sectors = np.concatenate([np.linalg.eigvalsh(build_hamiltonian(ModelParams("heisenberg"), s).matrix)
                              for s in all_sectors("spin-half", lat)])
    assert np.allclose(full, np.sort(sectors), atol=1e-10)
