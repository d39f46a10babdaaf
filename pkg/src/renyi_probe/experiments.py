"""Experiment drivers: one function per experiment, each returning (columns, rows).

Configs are INI files (``configparser``); every driver validates its inputs
and refuses sectors above the configured dimension caps.
"""

from __future__ import annotations

import configparser
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .estimation import (NO_ORACLE, estimate_global, estimate_local, fit_c2, global_purity_from_arrays,
                         oracle_partial_trace, predict_error, product_purities, renyi_entropy, subset_label)
from .hilbert import Lattice, SectorBasis, build_sector
from .measurement import (BlockState, measure, moment_from_counts, moment_from_probabilities, probabilities_from_factor,
                          write_records)
from .models import KINDS, ModelParams, build_hamiltonian, ground_state, restrict_to_partition
from .randomization import QuenchEnsemble, QuenchSchedule, RandomStream, fourth_moment_classes, sample_cue
from .simulate import cue_moments, local_counts, local_probabilities, mean_abs_error, quench_moments
from .states import basis_vector, density_wave, heisenberg_test_state, reduced_block_state, w_state

EXPERIMENTS = ("cue-check", "converge", "quench-opt", "error-scaling", "estimate", "local", "mbl", "area-law")

_TAG_CUE_CHECK = 30
_TAG_CUE_BASE = 31
_TAG_SCALING = 32
_TAG_LOCAL = 33
_TAG_DISORDER = 34
_TAG_ENSEMBLE = 35
_TAG_READOUT = 36
_TAG_STATE = 37


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _words(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _n_meas(text: str) -> int | None:
    text = text.strip().lower()
    return None if text in ("exact", "inf", "none") else int(text)


@dataclass
class RunConfig:
    experiment: str
    model: ModelParams = field(default_factory=lambda: ModelParams("heisenberg"))
    lx: int = 8
    ly: int = 1
    particles: int | None = None
    partition: str = "all"
    schedule: QuenchSchedule = field(default_factory=lambda: QuenchSchedule(eta=1))
    etas: list[int] = field(default_factory=lambda: [1])
    n_unitaries: int = 100
    n_measurements: int | None = None
    repetitions: int = 1
    disorder_realizations: int = 20
    unitary_cap: int = 3000
    oracle_cap: int = 13000
    options: dict[str, str] = field(default_factory=dict)
    source: str = ""

    @property
    def lattice(self) -> Lattice:
        return Lattice.square(self.lx, self.ly) if self.ly > 1 else Lattice.chain(self.lx)

    def opt(self, key: str, default: str) -> str:
        return self.options.get(key, default)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.lx < 1 or self.ly < 1:
            raise ConfigError("lattice sizes must be positive")
        if self.n_unitaries < 1 or self.repetitions < 1 or self.disorder_realizations < 1:
            raise ConfigError("budget counts must be >= 1")
        if self.n_measurements is not None and self.n_measurements < 2:
            raise ConfigError("n_measurements must be >= 2 or 'exact'")
        if any(e < 1 for e in self.etas):
            raise ConfigError("eta values must be >= 1")
        if self.model.kind == "heisenberg" and self.particles is not None:
            raise ConfigError("particle number is not used by the Heisenberg model")


def load_config(text: str, experiment: str | None = None) -> RunConfig:
    """Parse and validate an INI config; ``experiment`` overrides ``[run] experiment``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    cp.read_string(text)
    g = lambda sec, key, default: cp.get(sec, key, fallback=default)
    exp = experiment or g("run", "experiment", "")
    try:
        kind = g("model", "kind", "heisenberg")
        if kind not in KINDS:
            raise ConfigError(f"unknown model kind {kind!r}")
        model = ModelParams(kind, float(g("model", "hopping", "1.0")), float(g("model", "interaction", "0.0")))
        etas = _ints(g("schedule", "eta", "1"))
        inter = g("schedule", "interaction", "")
        sched = QuenchSchedule(
            eta=max(etas), T=float(g("schedule", "T", "1.0")), delta=float(g("schedule", "delta", "1.0")),
            mode=g("schedule", "mode", "fresh"), time_mode=g("schedule", "time_mode", "fixed"),
            t_max=float(g("schedule", "t_max", "2.0")), interaction=float(inter) if inter else None,
            spin_resolved=cp.getboolean("schedule", "spin_resolved", fallback=True))
        particles = g("lattice", "particles", "")
        cfg = RunConfig(
            experiment=exp, model=model, lx=int(g("lattice", "lx", "8")), ly=int(g("lattice", "ly", "1")),
            particles=int(particles) if particles else None, partition=g("partition", "region", "all"),
            schedule=sched, etas=etas, n_unitaries=int(g("budget", "n_unitaries", "100")),
            n_measurements=_n_meas(g("budget", "n_measurements", "exact")),
            repetitions=int(g("budget", "repetitions", "1")),
            disorder_realizations=int(g("budget", "disorder_realizations", "20")),
            unitary_cap=int(g("limits", "unitary_cap", "3000")), oracle_cap=int(g("limits", "oracle_cap", "13000")),
            options=dict(cp.items("experiment")) if cp.has_section("experiment") else {}, source=text)
    except ConfigError:
        raise
    except (ValueError, configparser.Error) as err:
        raise ConfigError(str(err)) from err
    cfg.validate()
    return cfg


def resolved_text(cfg: RunConfig) -> str:
    """INI dump of the fully resolved config (defaults filled in)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    s = cfg.schedule
    cp["run"] = {"experiment": cfg.experiment}
    cp["model"] = {"kind": cfg.model.kind, "hopping": repr(cfg.model.hopping),
                   "interaction": repr(cfg.model.interaction)}
    cp["lattice"] = {"lx": str(cfg.lx), "ly": str(cfg.ly),
                     "particles": "" if cfg.particles is None else str(cfg.particles)}
    cp["partition"] = {"region": cfg.partition}
    cp["schedule"] = {"eta": ",".join(map(str, cfg.etas)), "T": repr(s.T), "delta": repr(s.delta), "mode": s.mode,
                      "time_mode": s.time_mode, "t_max": repr(s.t_max),
                      "interaction": "" if s.interaction is None else repr(s.interaction),
                      "spin_resolved": str(s.spin_resolved).lower()}
    cp["budget"] = {"n_unitaries": str(cfg.n_unitaries),
                    "n_measurements": "exact" if cfg.n_measurements is None else str(cfg.n_measurements),
                    "repetitions": str(cfg.repetitions), "disorder_realizations": str(cfg.disorder_realizations)}
    cp["limits"] = {"unitary_cap": str(cfg.unitary_cap), "oracle_cap": str(cfg.oracle_cap)}
    cp["experiment"] = dict(sorted(cfg.options.items()))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _check_cap(bases, cap: int, what: str) -> None:
    for b in bases:
        if b.dim > cap:
            raise ConfigError(f"sector {b.label()} has dimension {b.dim} > {what} cap {cap}")


def _partition_sites(cfg: RunConfig, spec: str | None = None) -> list[int]:
    """'all', 'half', 'sites i j k' or 'rect x0 y0 lx ly'."""
    spec = (spec or cfg.partition).strip()
    lat = cfg.lattice
    head, *rest = spec.split()
    if head == "all":
        return list(range(lat.n_sites))
    if head == "half":
        return list(range(lat.n_sites // 2))
    if head == "sites":
        sites = sorted({int(x) for x in rest})
        if not sites or sites[0] < 0 or sites[-1] >= lat.n_sites:
            raise ConfigError(f"partition sites out of range: {spec}")
        return sites
    if head == "rect" and len(rest) == 4:
        try:
            return lat.rectangle(*map(int, rest))
        except ValueError as err:
            raise ConfigError(str(err)) from err
    raise ConfigError(f"cannot parse partition {spec!r}")


def _fmt(x) -> str:
    if x is None:
        return NO_ORACLE
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _seed_int(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


# --------------------------------------------------------------------------- drivers


_SE_FLOOR = 1e-12
CUE_CHECK_COLUMNS = ("dim", "pattern", "mean_re", "mean_im", "expected", "se_re", "se_im", "z_max")


def run_cue_check(cfg: RunConfig, seed: int, threads: int = 1):
    """Fourth-order CUE correlators against the 2-design identity."""
    rows = []
    n = int(cfg.opt("samples", "100000"))
    for dim in _ints(cfg.opt("dims", "2,4,8")):
        us = sample_cue(dim, RandomStream(seed, (_TAG_CUE_CHECK, dim)), size=n)
        for r in fourth_moment_classes(us):
            # a correlator that is real by construction has a rounding-level imaginary part; skip its z
            z_re = abs(r["mean"].real - r["expected"]) / r["se_re"] if r["se_re"] > _SE_FLOOR else 0.0
            z_im = abs(r["mean"].imag) / r["se_im"] if r["se_im"] > _SE_FLOOR else 0.0
            rows.append((dim, "".join(map(str, r["pattern"])), r["mean"].real, r["mean"].imag, r["expected"],
                         r["se_re"], r["se_im"], max(z_re, z_im)))
    return CUE_CHECK_COLUMNS, rows


CONVERGE_COLUMNS = ("sampler", "state", "eta", "jt_total", "n_unitaries", "repetitions", "mean_estimate", "exact",
                    "error", "error_se")


def _heisenberg_state(cfg: RunConfig, name: str, seed: int) -> BlockState:
    if cfg.model.kind != "heisenberg":
        raise ConfigError("test states are defined for the Heisenberg model")
    return heisenberg_test_state(name, cfg.lattice, RandomStream(seed, (_TAG_STATE,)).generator())


def _errors(arrays, exact: float):
    ests = [g.purity() for g in arrays]
    err, se = mean_abs_error(ests, exact)
    return float(np.mean(ests)), err, se


def cue_baseline(state: BlockState, cfg: RunConfig, seed: int, n_meas=None):
    """Plateau: the same budget with Haar unitaries on every sector."""
    arr = cue_moments(state, cfg.n_unitaries * cfg.repetitions, RandomStream(seed, (_TAG_CUE_BASE,)).generator(),
                      n_measurements=n_meas)
    return arr.split(cfg.repetitions)


def run_converge(cfg: RunConfig, seed: int, threads: int = 1):
    """Estimation error of known test states vs number of quenches."""
    rows = []
    total = cfg.n_unitaries * cfg.repetitions
    for name in _words(cfg.opt("states", "AF,PS,rand,mix")):
        state = _heisenberg_state(cfg, name, seed)
        _check_cap(state.bases, cfg.unitary_cap, "unitary")
        exact = float(sum(state.purities()))
        arrays = quench_moments(state, cfg.model, cfg.schedule, total, seed, checkpoints=cfg.etas,
                                n_measurements=cfg.n_measurements, threads=threads)
        for eta, arr in zip(sorted(set(cfg.etas)), arrays):
            m, err, se = _errors(arr.split(cfg.repetitions), exact)
            jt = eta * cfg.schedule.T * cfg.model.hopping if cfg.schedule.time_mode == "fixed" else \
                eta * cfg.schedule.t_max / 2
            rows.append(("quench", name, eta, jt, cfg.n_unitaries, cfg.repetitions, m, exact, err, se))
        if cfg.opt("baseline", "cue") == "cue":
            m, err, se = _errors(cue_baseline(state, cfg, seed, cfg.n_measurements), exact)
            rows.append(("cue", name, "", "", cfg.n_unitaries, cfg.repetitions, m, exact, err, se))
    return CONVERGE_COLUMNS, rows


QUENCH_OPT_COLUMNS = ("sweep", "value", "eta", "jt_total", "n_unitaries", "repetitions", "error", "error_se")


def run_quench_opt(cfg: RunConfig, seed: int, threads: int = 1):
    """Sweep one schedule parameter: 'jt' at fixed total time, 'delta' at fixed eta, or 'mode' vs eta."""
    sweep = cfg.opt("sweep", "jt")
    state = _heisenberg_state(cfg, cfg.opt("state", "AF"), seed)
    _check_cap(state.bases, cfg.unitary_cap, "unitary")
    exact = float(sum(state.purities()))
    total = cfg.n_unitaries * cfg.repetitions
    rows = []

    def measure_schedule(sched, checkpoints=None):
        arrs = quench_moments(state, cfg.model, sched, total, seed, checkpoints=checkpoints,
                              n_measurements=cfg.n_measurements, threads=threads)
        return [_errors(a.split(cfg.repetitions), exact)[1:] for a in arrs]

    if sweep == "jt":
        jt_total = float(cfg.opt("jt_total", "16"))
        for jt in _floats(cfg.opt("values", "0.125,0.25,0.5,1,2,4,8")):
            eta = int(round(jt_total / jt))
            if eta < 1 or not math.isclose(eta * jt, jt_total, rel_tol=1e-9):
                raise ConfigError(f"JT={jt} does not divide JT_tot={jt_total}")
            sched = replace(cfg.schedule, eta=eta, T=jt / cfg.model.hopping, time_mode="fixed")
            ((err, se),) = measure_schedule(sched)
            rows.append(("jt", jt, eta, jt_total, cfg.n_unitaries, cfg.repetitions, err, se))
    elif sweep == "delta":
        eta = max(cfg.etas)
        for d in _floats(cfg.opt("values", "0.1,0.3,1,3,10")):
            sched = replace(cfg.schedule, eta=eta, delta=d * cfg.model.hopping)
            ((err, se),) = measure_schedule(sched)
            rows.append(("delta", d, eta, eta * cfg.schedule.T * cfg.model.hopping, cfg.n_unitaries,
                         cfg.repetitions, err, se))
    elif sweep == "mode":
        for mode in _words(cfg.opt("values", "fresh,single-fixed,single-random")):
            base, _, times = mode.partition("-")
            sched = replace(cfg.schedule, eta=max(cfg.etas), mode=base, time_mode=("random" if times == "random"
                                                                                     else "fixed"))
            for eta, (err, se) in zip(sorted(set(cfg.etas)), measure_schedule(sched, cfg.etas)):
                jt = eta * (sched.t_max / 2 if sched.time_mode == "random" else sched.T * cfg.model.hopping)
                rows.append((mode, "", eta, jt, cfg.n_unitaries, cfg.repetitions, err, se))
        if cfg.opt("baseline", "cue") == "cue":
            _, err, se = _errors(cue_baseline(state, cfg, seed, cfg.n_measurements), exact)
            rows.append(("cue", "", "", "", cfg.n_unitaries, cfg.repetitions, err, se))
    else:
        raise ConfigError(f"unknown sweep {sweep!r}")
    return QUENCH_OPT_COLUMNS, rows


SCALING_COLUMNS = ("dim", "n_unitaries", "n_measurements", "trials", "error", "error_se", "predicted_error", "c2")


def _pure_state_of_dim(dim: int) -> BlockState:
    L = int(round(math.log2(dim)))
    if 2**L != dim:
        raise ConfigError(f"error-scaling dims must be powers of two, got {dim}")
    b = build_sector("spin-half", Lattice.chain(L))
    return BlockState.pure(b, np.eye(dim)[0])


def error_scaling_table(dims, n_unitaries, n_measurements, trials: int, seed: int):
    """Empirical mean |p2_est - 1| for a pure state under CUE unitaries over a (dim, N_U, N_M) grid."""
    out = []
    for dim in dims:
        state = _pure_state_of_dim(dim)
        for nu in n_unitaries:
            for nm in n_measurements:
                rng = RandomStream(seed, (_TAG_SCALING, dim, nu, 0 if nm is None else nm)).generator()
                arr = cue_moments(state, nu * trials, rng, n_measurements=nm)
                err, se = mean_abs_error([g.purity() for g in arr.split(trials)], 1.0)
                out.append((dim, nu, nm, trials, err, se))
    return out


def run_error_scaling(cfg: RunConfig, seed: int, threads: int = 1):
    dims = _ints(cfg.opt("dims", "16,64,256"))
    nus = _ints(cfg.opt("n_unitaries", "100,1000"))
    nms = [_n_meas(x) for x in _words(cfg.opt("n_measurements", "exact,4,16,64,256,1024"))]
    table = error_scaling_table(dims, nus, nms, int(cfg.opt("trials", "20")), seed)
    exact_rows = [r for r in table if r[2] is None]
    if not exact_rows:
        raise ConfigError("error-scaling needs an 'exact' entry in n_measurements to fit C2")
    c2 = fit_c2([r[4] for r in exact_rows], [r[0] for r in exact_rows], [r[1] for r in exact_rows])
    rows = [(d, nu, "exact" if nm is None else nm, t, e, se, predict_error(nu, nm, d, c2), c2)
            for d, nu, nm, t, e, se in table]
    return SCALING_COLUMNS, rows


ESTIMATE_COLUMNS = ("label", "estimate", "std_error", "exact")


def _prepare_state(cfg: RunConfig, seed: int):
    """Full-system state and its basis from ``[experiment] state``."""
    lat = cfg.lattice
    name = cfg.opt("state", "ground")
    kind = cfg.model.kind
    if kind == "heisenberg":
        basis = build_sector("spin-half", lat, int(cfg.opt("sz", "0")))
    elif kind == "bose-hubbard":
        basis = build_sector("boson", lat, cfg.particles if cfg.particles is not None else lat.n_sites // 2)
    else:
        n = cfg.particles if cfg.particles is not None else lat.n_sites
        basis = build_sector("fermion-spinful", lat, (n, int(cfg.opt("sz", "0"))))
    _check_cap([basis], cfg.oracle_cap, "oracle")
    if name == "ground":
        return basis, ground_state(cfg.model, basis).vector
    if kind == "heisenberg" and name in ("AF", "PS", "rand"):
        st = heisenberg_test_state(name, lat, RandomStream(seed, (_TAG_STATE,)).generator())
        return basis, st.factors[0][:, 0]
    if kind == "bose-hubbard" and name == "density-wave":
        return basis, basis_vector(basis, density_wave(lat.n_sites, basis.constraint))
    raise ConfigError(f"state {name!r} not available for {kind}")


def _subsystem_state(cfg: RunConfig, basis, psi, sites):
    sub_lat = cfg.lattice.sublattice(sites)
    if len(sites) == cfg.lattice.n_sites:
        return BlockState.pure(basis, psi), 1.0
    return reduced_block_state(basis, psi, sites, sub_lat)


def _quench_unitary_blocks(ens: QuenchEnsemble, k: int):
    return [u.matrix for u in ens.unitary(k)]


def run_estimate(cfg: RunConfig, seed: int, threads: int = 1, records_dir=None):
    """Full protocol on one partition of a prepared state, with optional record dumps."""
    basis, psi = _prepare_state(cfg, seed)
    sites = _partition_sites(cfg)
    state, exact = _subsystem_state(cfg, basis, psi, sites)
    _check_cap(state.bases, cfg.unitary_cap, "unitary")
    params = restrict_to_partition(cfg.model, cfg.lattice, sites)
    ens = QuenchEnsemble(params, state.bases, cfg.schedule, seed)
    recs = [measure(state, _quench_unitary_blocks(ens, k), k, cfg.n_measurements,
                    RandomStream(seed, (_TAG_READOUT, k))) for k in range(cfg.n_unitaries)]
    rep = estimate_global(recs, {"seed": seed, "eta": cfg.schedule.eta})
    if records_dir is not None:
        records_dir.mkdir(parents=True, exist_ok=True)
        write_records(recs, records_dir / "records.csv")
    exact_sec = state.purities()
    rows = [(lab, p, se, ex) for lab, p, se, ex in zip(rep.labels, rep.purities, rep.sector_std_errors, exact_sec)]
    rows.append(("total", rep.purity, rep.std_error, exact))
    rows.append(("renyi2", rep.renyi2, rep.renyi2_std_error, -math.log(exact)))
    return ESTIMATE_COLUMNS, rows


LOCAL_COLUMNS = ("subset", "estimate", "std_error", "exact")


def local_table(L: int, n_unitaries: int, n_measurements: int | None, seed: int):
    """Local-protocol purity table of the W state; returns (SubsetPurityTable, exact dict)."""
    psi = w_state(L)
    dims = [2] * L
    rng = RandomStream(seed, (_TAG_LOCAL, L)).generator()
    probs = local_probabilities(psi, dims, n_unitaries, rng)
    data = probs if n_measurements is None else local_counts(probs, n_measurements, rng)
    table = estimate_local(data, dims, n_measurements)
    exact = product_purities(np.outer(psi, psi.conj()), dims)
    return table, exact


def run_local(cfg: RunConfig, seed: int, threads: int = 1):
    L = int(cfg.opt("sites", "4"))
    if cfg.opt("state", "w") != "w":
        raise ConfigError("the local driver prepares the W state")
    table, exact = local_table(L, cfg.n_unitaries, cfg.n_measurements, seed)
    rows = [(subset_label(sub), v, se, exact[sub]) for sub, v, se in table.rows()]
    return LOCAL_COLUMNS, rows


MBL_COLUMNS = ("interaction", "jt", "realizations", "exact_s2", "estimated_s2", "std_error")


def _boson_half_sectors(n_sites: int, n_particles: int) -> list[SectorBasis]:
    lat = Lattice.chain(n_sites)
    return [build_sector("boson", lat, n, n_particles) for n in range(n_particles + 1)]


def mbl_realization(params: ModelParams, basis: SectorBasis, psi0, times, sub_sites, sector_bases,
                    schedule: QuenchSchedule, n_unitaries: int, n_measurements: int | None, seed: int):
    """Exact and estimated half-chain S2 at every time for one disorder pattern.

    The unitaries are shared across times (the same quench sequences are
    applied to each time slice).
    """
    H = build_hamiltonian(params, basis).matrix
    w, v = np.linalg.eigh(H)
    c = v.T @ psi0
    by_label = {b.label(): i for i, b in enumerate(sector_bases)}
    quench_params = replace(params, disorder=None)
    ens = QuenchEnsemble(quench_params, sector_bases, schedule, seed)
    unitaries = [_quench_unitary_blocks(ens, k) for k in range(n_unitaries)]
    exact_s2, est_s2, se_s2 = [], [], []
    for it, t in enumerate(times):
        psi = v @ (np.exp(-1j * w * t) * c)
        dm = oracle_partial_trace(basis, psi, sub_sites)
        blocks = dm.sector_blocks(n_max=basis.n_max, lattice=Lattice.chain(len(sub_sites)))
        bs = BlockState.from_blocks([b for b, _ in blocks], [m for _, m in blocks])
        idx = [by_label[lab] for lab in bs.labels]
        tr = np.zeros((n_unitaries, len(idx)))
        mo = np.zeros_like(tr)
        for k in range(n_unitaries):
            probs = [probabilities_from_factor(unitaries[k][i] @ f) for i, f in zip(idx, bs.factors)]
            if n_measurements is None:
                tr[k] = [p.sum() for p in probs]
                mo[k] = [moment_from_probabilities(p) for p in probs]
            else:
                rng = RandomStream(seed, (_TAG_READOUT, k, it)).generator()
                flat = np.clip(np.concatenate(probs), 0, None)
                counts = rng.multinomial(n_measurements, flat / flat.sum())
                parts = np.split(counts, np.cumsum([p.size for p in probs])[:-1])
                tr[k] = [x.sum() / n_measurements for x in parts]
                mo[k] = [moment_from_counts(x, n_measurements) for x in parts]
        _, p2, se, _ = global_purity_from_arrays(tr, mo, bs.dims)
        exact_s2.append(-math.log(dm.purity))
        est_s2.append(renyi_entropy(p2) if p2 > 0 else math.nan)
        se_s2.append(se / p2 if p2 > 0 else math.nan)
    return np.array(exact_s2), np.array(est_s2), np.array(se_s2)


def run_mbl(cfg: RunConfig, seed: int, threads: int = 1):
    """Disorder-averaged half-chain S2 vs time for U in the configured set (Anderson vs MBL)."""
    if cfg.model.kind != "bose-hubbard":
        raise ConfigError("mbl driver needs the bose-hubbard model")
    L = cfg.lx
    N = cfg.particles if cfg.particles is not None else L // 2
    lat = Lattice.chain(L)
    basis = build_sector("boson", lat, N)
    _check_cap([basis], cfg.unitary_cap, "dense evolution")
    psi0 = basis_vector(basis, density_wave(L, N))
    sub = _partition_sites(cfg, cfg.partition if cfg.partition != "all" else "half")
    sectors = _boson_half_sectors(len(sub), N)
    times = _floats(cfg.opt("times", "0,1,3,10,30,100"))
    w_dis = float(cfg.opt("static_disorder", "10"))
    quench_u = cfg.schedule.interaction if cfg.schedule.interaction is not None else cfg.model.hopping
    sched = replace(cfg.schedule, interaction=quench_u)
    R = cfg.disorder_realizations
    rows = []
    for u_val in _floats(cfg.opt("interactions", "0,1")):

        def one(r):
            dis = RandomStream(seed, (_TAG_DISORDER, r)).generator().uniform(-w_dis, w_dis, L) * cfg.model.hopping
            params = ModelParams("bose-hubbard", cfg.model.hopping, u_val * cfg.model.hopping, disorder=dis)
            return mbl_realization(params, basis, psi0, np.array(times) / cfg.model.hopping, sub, sectors, sched,
                                   cfg.n_unitaries, cfg.n_measurements, _seed_int(seed, _TAG_ENSEMBLE, r))

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                res = list(pool.map(one, range(R)))
        else:
            res = [one(r) for r in range(R)]
        ex = np.array([x[0] for x in res])
        es = np.array([x[1] for x in res])
        se = np.array([x[2] for x in res])
        for i, t in enumerate(times):
            # protocol error of the realization average (disorder spread is common to both curves)
            rows.append((u_val, t, R, float(ex[:, i].mean()), float(np.nanmean(es[:, i])),
                         float(math.sqrt(np.nansum(se[:, i] ** 2)) / R)))
    return MBL_COLUMNS, rows


AREA_COLUMNS = ("partition", "boundary", "eta", "n_unitaries", "n_measurements", "estimated_s2", "std_error",
                "exact_s2")


def boundary_size(lx: int, ly: int) -> int:
    return 2 * (lx + ly - 2)


def run_area_law(cfg: RunConfig, seed: int, threads: int = 1):
    """Estimated vs exact S2 of rectangular partitions of a 2D Heisenberg ground state."""
    if cfg.model.kind != "heisenberg" or cfg.ly < 2:
        raise ConfigError("area-law driver needs a 2D Heisenberg lattice")
    lat = cfg.lattice
    basis = build_sector("spin-half", lat, 0)
    _check_cap([basis], cfg.oracle_cap, "oracle")
    psi = ground_state(cfg.model, basis).vector
    rows = []
    for spec in cfg.opt("partitions", "rect 1 1 1 1; rect 1 1 2 1; rect 1 1 2 2; rect 0 1 3 2; rect 0 1 4 2").split(";"):
        spec = spec.strip()
        _, x0, y0, px, py = spec.split()
        sites = _partition_sites(cfg, spec)
        state, exact = _subsystem_state(cfg, basis, psi, sites)
        _check_cap(state.bases, cfg.unitary_cap, "unitary")
        params = restrict_to_partition(cfg.model, lat, sites)
        sched = replace(cfg.schedule, eta=max(cfg.etas))
        arrays = quench_moments(state, params, sched, cfg.n_unitaries, seed, checkpoints=cfg.etas,
                                n_measurements=cfg.n_measurements, threads=threads)
        for eta, arr in zip(sorted(set(cfg.etas)), arrays):
            rep = arr.report()
            nm = "exact" if cfg.n_measurements is None else cfg.n_measurements
            rows.append((f"{px}x{py}@{x0},{y0}", boundary_size(int(px), int(py)), eta, cfg.n_unitaries, nm,
                         rep.renyi2, rep.renyi2_std_error, -math.log(exact)))
    return AREA_COLUMNS, rows


DRIVERS: dict[str, Callable] = {
    "cue-check": run_cue_check,
    "converge": run_converge,
    "quench-opt": run_quench_opt,
    "error-scaling": run_error_scaling,
    "estimate": run_estimate,
    "local": run_local,
    "mbl": run_mbl,
    "area-law": run_area_law,
}


def format_rows(rows) -> list[list[str]]:
    return [[_fmt(x) for x in row] for row in rows]
