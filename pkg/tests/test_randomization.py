import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi_probe.hilbert import Lattice, build_sector
from renyi_probe.models import ModelParams, build_hamiltonian, propagator
from renyi_probe.randomization import (QuenchEnsemble, QuenchSchedule, RandomStream, apply_local, apply_local_batch,
                                       fourth_moment_classes, sample_cue, sample_local_unitary,
                                       sample_quench_unitary)


def brute_partial_purity(psi, keep, L):
    t = psi.reshape([2] * L)
    drop = [a for a in range(L) if a not in keep]
    m = np.transpose(t, list(keep) + drop).reshape(2 ** len(keep), -1)
    r = m @ m.conj().T
    return float(np.real(np.trace(r @ r)))


def test_cue_dim_one_is_phase():
    u = sample_cue(1, RandomStream(3))
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1) < 1e-12


@pytest.mark.parametrize("dim", [1, 2, 5, 16])
def test_cue_unitary_and_unit_determinant(dim):
    us = sample_cue(dim, RandomStream(1), size=20)
    for u in us:
        assert np.allclose(u.conj().T @ u, np.eye(dim), atol=1e-10)
        assert abs(abs(np.linalg.det(u)) - 1) < 1e-8


def test_cue_first_and_second_moments():
    us = sample_cue(4, RandomStream(11), size=100_000)
    a2 = np.abs(us[:, 0, 0]) ** 2
    a4 = a2**2
    se2 = a2.std(ddof=1) / np.sqrt(a2.size)
    se4 = a4.std(ddof=1) / np.sqrt(a4.size)
    assert abs(a2.mean() - 0.25) < 3 * se2
    assert abs(a4.mean() - 2 / (4 * 5)) < 3 * se4


def test_streams_reproducible_and_distinct():
    a = sample_cue(6, RandomStream(42, (1, 2)))
    b = sample_cue(6, RandomStream(42, (1, 2)))
    c = sample_cue(6, RandomStream(42, (1, 3)))
    assert a.tobytes() == b.tobytes()
    assert not np.allclose(a, c)


def test_cue_fourth_moments_small_sample():
    us = sample_cue(3, RandomStream(5), size=40_000)
    for row in fourth_moment_classes(us):
        assert abs(row["mean"].real - row["expected"]) <= 5 * row["se_re"] + 1e-12
        assert abs(row["mean"].imag) <= 5 * row["se_im"] + 1e-12


def test_local_single_site_equals_cue():
    (u,) = sample_local_unitary([3], RandomStream(9, (4,)))
    assert np.array_equal(u, sample_cue(3, RandomStream(9, (4,))))


def test_local_unitary_rejects_small_dims():
    with pytest.raises(ValueError):
        sample_local_unitary([2, 1], RandomStream(0))


def test_apply_local_matches_kron(rng):
    us = sample_local_unitary([2, 3, 2], rng)
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    full = np.kron(np.kron(us[0], us[1]), us[2])
    assert np.allclose(apply_local(us, psi), full @ psi)


def test_apply_local_batch_matches_kron(rng):
    us = np.stack([np.stack(sample_local_unitary([2, 2, 2], rng)) for _ in range(3)])
    w = rng.normal(size=(8, 2)) + 0j
    out = apply_local_batch(us, w)
    for b in range(3):
        full = np.kron(np.kron(us[b, 0], us[b, 1]), us[b, 2])
        assert np.allclose(out[b], full @ w)


def test_local_one_design_probabilities(rng):
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    us = sample_cue(2, RandomStream(2), size=4 * 10_000).reshape(10_000, 4, 2, 2)
    p = np.abs(apply_local_batch(us, psi[:, None])[..., 0]) ** 2
    se = p.std(axis=0, ddof=1) / np.sqrt(p.shape[0])
    assert np.all(np.abs(p.mean(axis=0) - 1 / 16) < 3 * se)


def test_local_bell_second_moment():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    purities = [1.0, brute_partial_purity(bell, [0], 2), brute_partial_purity(bell, [1], 2),
                brute_partial_purity(bell, [0, 1], 2)]
    expected = sum(purities) / (4 * 9)
    assert expected == pytest.approx(3 / 36)
    us = sample_cue(2, RandomStream(7), size=2 * 50_000).reshape(50_000, 2, 2, 2)
    p = np.abs(apply_local_batch(us, bell[:, None].astype(complex))[..., 0]) ** 2
    sq = p**2
    se = sq.std(axis=0, ddof=1) / np.sqrt(sq.shape[0])
    assert np.all(np.abs(sq.mean(axis=0) - expected) < 4 * se)


def test_quench_without_disorder_is_deterministic():
    lat = Lattice.chain(4)
    b = build_sector("spin-half", lat, 0)
    p = ModelParams("heisenberg")
    u = sample_quench_unitary(p, b, QuenchSchedule(eta=1, T=0.7, delta=0.0), RandomStream(3, (0,)))
    ref = propagator(build_hamiltonian(p, b), 0.7).matrix
    assert np.allclose(u.matrix, ref, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["fresh", "single"]), st.sampled_from(["fixed", "random"]))
@settings(max_examples=10)
def test_quench_unitaries_are_unitary_and_reproducible(seed, mode, time_mode):
    b = build_sector("spin-half", Lattice.chain(4), 0)
    sched = QuenchSchedule(eta=5, mode=mode, time_mode=time_mode)
    ens = QuenchEnsemble(ModelParams("heisenberg"), [b], sched, seed)
    (u,) = ens.unitary(3)
    assert u.is_unitary()
    assert abs(abs(np.linalg.det(u.matrix)) - 1) < 1e-8
    (again,) = QuenchEnsemble(ModelParams("heisenberg"), [b], sched, seed).unitary(3)
    assert u.matrix.tobytes() == again.matrix.tobytes()


def test_quench_product_order():
    b = build_sector("spin-half", Lattice.chain(3), 1)
    p = ModelParams("heisenberg")
    ens = QuenchEnsemble(p, [b], QuenchSchedule(eta=3), seed=1)
    expected = np.eye(b.dim)
    for j in (1, 2, 3):
        d, t = ens.quench(0, j)
        expected = propagator(build_hamiltonian(p.with_disorder(d), b), t).matrix @ expected
    assert np.allclose(ens.unitary(0)[0].matrix, expected)


def test_single_pattern_alternates():
    b = build_sector("spin-half", Lattice.chain(4), 0)
    ens = QuenchEnsemble(ModelParams("heisenberg"), [b], QuenchSchedule(eta=4, mode="single", time_mode="random"), 5)
    d1, t1 = ens.quench(2, 1)
    d2, _ = ens.quench(2, 2)
    d3, t3 = ens.quench(2, 3)
    assert np.array_equal(d1, d3)
    assert np.all(d2 == 0)
    assert 0 <= t1 <= 2 and 0 <= t3 <= 2 and t1 != t3


def test_fermi_hubbard_patterns_spin_resolved_option():
    b = build_sector("fermion-spinful", Lattice.chain(2), (2, 0))
    p = ModelParams("fermi-hubbard", 1.0, 4.0)
    d, _ = QuenchEnsemble(p, [b], QuenchSchedule(eta=1), 0).quench(0, 1)
    assert d.shape == (2, 2)
    d, _ = QuenchEnsemble(p, [b], QuenchSchedule(eta=1, spin_resolved=False), 0).quench(0, 1)
    assert d.shape == (2,)


def test_evolve_checkpoints_are_prefixes():
    b = build_sector("spin-half", Lattice.chain(4), 0)
    ens = QuenchEnsemble(ModelParams("heisenberg"), [b], QuenchSchedule(eta=6), 8)
    psi = np.eye(b.dim)[:, :1]
    outs = ens.evolve(1, [psi], [0, 2, 6])
    short = QuenchEnsemble(ModelParams("heisenberg"), [b], QuenchSchedule(eta=2), 8)
    assert np.allclose(outs[0][0], psi)
    assert np.allclose(outs[1][0], short.evolve(1, [psi])[0][0])


def test_multi_sector_blocks_share_pattern():
    lat = Lattice.chain(3)
    bases = [build_sector("boson", lat, n) for n in (1, 2)]
    ens = QuenchEnsemble(ModelParams("bose-hubbard", 1.0, 1.0), bases, QuenchSchedule(eta=2), 4)
    blocks = ens.unitary(0)
    assert [u.dim for u in blocks] == [3, 6]
    # the N=1 block of a bosonic quench is the single-particle propagator
    d, t = ens.quench(0, 1)
    h1 = np.diag(d) - (np.eye(3, k=1) + np.eye(3, k=-1))
    u1 = propagator(h1, t)
    d2, t2 = ens.quench(0, 2)
    u2 = propagator(np.diag(d2) - (np.eye(3, k=1) + np.eye(3, k=-1)), t2)
    site = np.argmax(bases[0].states, axis=1)
    assert np.allclose(blocks[0].matrix, (u2 @ u1)[np.ix_(site, site)])


def test_quench_one_design(rng):
    b = build_sector("spin-half", Lattice.chain(4), 0)
    ens = QuenchEnsemble(ModelParams("heisenberg"), [b], QuenchSchedule(eta=12), 21)
    rho_factor = np.eye(b.dim)[:, :1]
    acc = np.zeros((b.dim, b.dim), complex)
    n = 1500
    for k in range(n):
        w = ens.evolve(k, [rho_factor])[0][0]
        acc += w @ w.conj().T
    acc /= n
    # Monte Carlo error on entries of a Haar-rotated projector ~ 1/(dim sqrt(n))
    assert np.abs(acc - np.eye(b.dim) / b.dim).max() < 5 / (b.dim * np.sqrt(n))


@pytest.mark.slow
def test_quench_two_design_after_3L():
    L = 4
    b = build_sector("spin-half", Lattice.chain(L), 0)
    ens = QuenchEnsemble(ModelParams("heisenberg"), [b], QuenchSchedule(eta=3 * L), 13)
    n = 6000
    samples = np.stack([ens.unitary(k)[0].matrix for k in range(n)])
    for row in fourth_moment_classes(samples):
        assert abs(row["mean"].real - row["expected"]) <= 5 * row["se_re"] + 1e-12
        assert abs(row["mean"].imag) <= 5 * row["se_im"] + 1e-12
