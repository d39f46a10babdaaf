"""Random unitaries: Haar (CUE) sampling, disordered quench sequences, local rotations.

Randomness is keyed: every draw comes from a generator derived from
``(seed, key)`` through ``numpy.random.SeedSequence``, so unitary ``k`` of
an ensemble is the same no matter which worker builds it or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .hilbert import SectorBasis
from .models import ModelParams, build_hamiltonian, disorder_columns, SectorOperator

_TAG_QUENCH = 0
_TAG_PATTERN = 1


@dataclass(frozen=True)
class RandomStream:
    seed: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def _rng(stream) -> np.random.Generator:
    if isinstance(stream, RandomStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    return np.random.default_rng(stream)


def haar_columns(dim: int, rank: int, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """First ``rank`` columns of Haar unitaries, shape (batch, dim, rank) or (dim, rank).

    QR of a complex Ginibre matrix with the phases of diag(R) divided out.
    """
    shape = (dim, rank) if batch is None else (batch, dim, rank)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def sample_cue(dim: int, stream, size: int | None = None) -> np.ndarray:
    """Haar-random unitary of size ``dim`` (or a stack of ``size`` of them)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return haar_columns(dim, dim, _rng(stream), batch=size)


def _set_partitions(n: int):
    """Restricted growth strings of length n (one per set partition)."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from rec(prefix + [v], max(top, v))
    yield from rec([0], 0)


def fourth_moment_classes(samples: np.ndarray, row: int = 0):
    """Empirical <u_{s i1} u*_{s i2} u_{s i3} u*_{s i4}> for every equality pattern of (i1..i4).

    ``samples`` has shape (n, dim, dim). Returns a list of dicts with the
    pattern, representative indices, empirical mean, standard errors of the
    real and imaginary parts, and the Haar value
    (d12 d34 + d14 d23) / (N (N + 1)).
    """
    n, dim, _ = samples.shape
    u = samples[:, row, :]
    out = []
    for pattern in _set_partitions(4):
        if max(pattern) + 1 > dim:
            continue
        i1, i2, i3, i4 = pattern
        x = u[:, i1] * u[:, i2].conj() * u[:, i3] * u[:, i4].conj()
        expected = ((i1 == i2) * (i3 == i4) + (i1 == i4) * (i2 == i3)) / (dim * (dim + 1))
        out.append({
            "pattern": pattern,
            "mean": complex(x.mean()),
            "se_re": float(x.real.std(ddof=1) / np.sqrt(n)),
            "se_im": float(x.imag.std(ddof=1) / np.sqrt(n)),
            "expected": float(expected),
        })
    return out


def sample_local_unitary(dims: Sequence[int], stream) -> list[np.ndarray]:
    """Independent CUE matrices, one per local constituent."""
    if any(d < 2 for d in dims):
        raise ValueError("local dimensions must be >= 2")
    rng = _rng(stream)
    return [haar_columns(d, d, rng) for d in dims]


def apply_local(unitaries: Sequence[np.ndarray], state: np.ndarray) -> np.ndarray:
    """Apply u_1 x ... x u_L to a vector or to the columns of a (prod d, r) matrix without forming the product."""
    dims = [u.shape[0] for u in unitaries]
    squeeze = state.ndim == 1
    w = state.reshape(dims + [-1])
    for axis, u in enumerate(unitaries):
        w = np.moveaxis(np.tensordot(u, w, axes=([1], [axis])), 0, axis)
    w = w.reshape(int(np.prod(dims)), -1)
    return w[:, 0] if squeeze else w


def apply_local_batch(unitaries: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Batched ``apply_local``: ``unitaries`` (B, L, d, d), ``state`` (d**L, r) -> (B, d**L, r)."""
    B, L, d, _ = unitaries.shape
    w = np.broadcast_to(state.reshape((1,) + (d,) * L + (-1,)), (B,) + (d,) * L + (state.shape[-1],))
    letters = "klmnopqstuvw"[:L]
    for axis in range(L):
        src = "b" + letters[:axis] + "j" + letters[axis + 1:] + "r"
        dst = "b" + letters[:axis] + "i" + letters[axis + 1:] + "r"
        w = np.einsum(f"bij,{src}->{dst}", unitaries[:, axis], w)
    return w.reshape(B, d**L, -1)


@dataclass(frozen=True)
class QuenchSchedule:
    """Sequence of disordered quenches.

    ``mode`` is "fresh" (i.i.d. normal pattern every quench) or "single" (one
    pattern per unitary applied on odd quenches only). ``time_mode`` is
    "fixed" (duration ``T``) or "random" (uniform in [0, ``t_max``]).
    ``interaction`` overrides the model interaction during quenches.
    ``spin_resolved`` draws independent offsets per spin species (FH only).
    """

    eta: int
    T: float = 1.0
    delta: float = 1.0
    mode: str = "fresh"
    time_mode: str = "fixed"
    t_max: float = 2.0
    interaction: float | None = None
    spin_resolved: bool = True
    times: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("eta must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.mode not in ("fresh", "single"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.time_mode not in ("fixed", "random"):
            raise ValueError(f"unknown time mode {self.time_mode!r}")
        if self.time_mode == "fixed" and not self.T > 0:
            raise ValueError("T must be positive")
        if self.times is not None:
            if len(self.times) != self.eta or any(t <= 0 for t in self.times):
                raise ValueError("explicit times must be positive, one per quench")

    @property
    def total_time(self) -> float:
        if self.times is not None:
            return float(sum(self.times))
        if self.time_mode == "fixed":
            return self.eta * self.T
        return self.eta * self.t_max / 2.0


@dataclass(eq=False)
class _SectorQuench:
    basis: SectorBasis
    h0: np.ndarray
    columns: np.ndarray


@dataclass(eq=False)
class QuenchEnsemble:
    """Ensemble of unitaries U = exp(-i H^eta T_eta) ... exp(-i H^1 T_1) acting blockwise on sectors.

    One disorder pattern per quench is shared by all sectors, so that the
    blocks together form a single physical unitary.
    """

    params: ModelParams
    bases: Sequence[SectorBasis]
    schedule: QuenchSchedule
    seed: int = 0
    _sectors: list = field(init=False, repr=False)

    def __post_init__(self):
        p = self.params.with_disorder(None)
        if self.schedule.interaction is not None:
            p = replace(p, interaction=self.schedule.interaction)
        self._clean = p
        self._sectors = [
            _SectorQuench(b, build_hamiltonian(p, b).matrix, disorder_columns(p.kind, b)) for b in self.bases
        ]
        self._n_sites = self.bases[0].n_sites

    def _pattern_shape(self):
        if self.params.kind == "fermi-hubbard" and self.schedule.spin_resolved:
            return (self._n_sites, 2)
        return (self._n_sites,)

    def quench(self, k: int, j: int) -> tuple[np.ndarray, float]:
        """Disorder offsets and duration of quench ``j`` (1-based) of unitary ``k``."""
        s = self.schedule
        stream = RandomStream(self.seed, (_TAG_QUENCH, k, j))
        rng = stream.generator()
        shape = self._pattern_shape()
        if s.mode == "fresh":
            offsets = rng.normal(0.0, s.delta, size=shape) if s.delta > 0 else np.zeros(shape)
        else:
            base = RandomStream(self.seed, (_TAG_PATTERN, k)).generator()
            offsets = base.normal(0.0, s.delta, size=shape) if s.delta > 0 else np.zeros(shape)
            offsets = offsets * (j % 2)
        if s.times is not None:
            t = s.times[j - 1]
        elif s.time_mode == "random":
            t = rng.uniform(0.0, s.t_max / self.params.hopping)
        else:
            t = s.T
        return offsets, float(t)

    def _flat(self, offsets: np.ndarray) -> np.ndarray:
        if self.params.kind == "fermi-hubbard" and offsets.ndim == 1:
            offsets = np.repeat(offsets[:, None], 2, axis=1)
        return offsets.ravel()

    def step_propagators(self, k: int, j: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-sector (phases, eigenvectors) of quench ``j``: U_j = V diag(phases) V^dag."""
        offsets, t = self.quench(k, j)
        flat = self._flat(offsets)
        out = []
        for sec in self._sectors:
            h = sec.h0 + np.diag(sec.columns @ flat)
            w, v = np.linalg.eigh(h)
            out.append((np.exp(-1j * w * t), v))
        return out

    def evolve(self, k: int, states: Sequence[np.ndarray], checkpoints: Sequence[int] | None = None):
        """Apply the quench sequence of unitary ``k`` to per-sector states.

        ``states[i]`` is a (dim_i, r_i) matrix (or vector) in sector i.
        Returns a list over ``checkpoints`` (quench counts, default just eta) of
        per-sector evolved states. Quench j does not depend on the total
        eta, so a sequence of checkpoints samples the prefixes of one run.
        """
        eta = self.schedule.eta
        checkpoints = [eta] if checkpoints is None else sorted(set(int(c) for c in checkpoints))
        if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > eta):
            raise ValueError("checkpoints must lie in [0, eta]")
        cur = [np.asarray(s, dtype=complex) for s in states]
        out = []
        ci = 0
        while ci < len(checkpoints) and checkpoints[ci] == 0:
            out.append([c.copy() for c in cur])
            ci += 1
        for j in range(1, eta + 1):
            if ci >= len(checkpoints):
                break
            for i, (ph, v) in enumerate(self.step_propagators(k, j)):
                c = v.conj().T @ cur[i]
                c = (ph[:, None] * c) if c.ndim == 2 else ph * c
                cur[i] = v @ c
            while ci < len(checkpoints) and checkpoints[ci] == j:
                out.append([c.copy() for c in cur])
                ci += 1
        return out

    def unitary(self, k: int) -> list[SectorOperator]:
        """Full per-sector unitary blocks of member ``k``."""
        mats = [np.eye(sec.basis.dim, dtype=complex) for sec in self._sectors]
        (blocks,) = self.evolve(k, mats)
        return [SectorOperator(sec.basis, m) for sec, m in zip(self._sectors, blocks)]


def sample_quench_unitary(params: ModelParams, basis: SectorBasis, schedule: QuenchSchedule, stream) -> SectorOperator:
    """Single-sector quench unitary for ``stream`` = RandomStream(seed, (k,))."""
    if isinstance(stream, RandomStream):
        seed, key = stream.seed, stream.key
    else:
        seed, key = int(stream), ()
    k = key[0] if key else 0
    return QuenchEnsemble(params, [basis], schedule, seed).unitary(k)[0]
