"""Event-driven stochastic simulation of the particle-antiparticle-hole
process on a finite lattice.

A trajectory is exact continuous-time Markov dynamics (no time
discretization): waiting times are exponential in the total rate and bonds
are selected proportionally to their rates through a Fenwick tree (see
``ncr._kernel``). Initial data is a product measure with a density step at
the origin; output is the empirical density profile in Eulerian coordinates
x = (site - origin)/N at macroscopic times t (microscopic time t*N).

The lattice is sized so that the region influenced by the frozen boundary
blocks cannot reach the observation window: information propagates at most
one site per unit-rate event, and the padding uses a factor-2 safety margin
over the maximal characteristic speed. With deterministic flanking densities
(|u| = 1) any event near the boundary means the cone was breached and the
run aborts instead of silently biasing the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .flux import ModelParams, is_attractive, marginal, theta_of_density

__all__ = [
    "LatticeState",
    "SimConfig",
    "EmpiricalProfile",
    "CurrentRecord",
    "SimResult",
    "InfluenceConeBreachError",
    "bond_rate",
    "apply_move",
    "sample_initial",
    "empirical_profile",
    "evolve_state",
    "run",
]

FROZEN_BOUNDARY = 2  # frozen sites per side, excluded from the dynamics


class InfluenceConeBreachError(RuntimeError):
    """The dynamics reached the outermost active sites: margin too small."""


@dataclass
class LatticeState:
    """Finite lattice of occupations in {-1, 0, +1}.

    origin_index is the site mapped to macroscopic x = 0; site j sits at
    x = (j - origin_index) / N.
    """

    sites: np.ndarray
    origin_index: int

    def __post_init__(self):
        self.sites = np.asarray(self.sites, dtype=np.int8)
        if self.sites.size < 4:
            raise ValueError("lattice must have at least 4 sites")
        if not np.all((self.sites >= -1) & (self.sites <= 1)):
            raise ValueError("occupations must lie in {-1, 0, +1}")


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    N: int
    t_end: float
    u_minus: float
    u_plus: float
    seed: int = 0
    margin: float = 0.2
    snapshot_times: tuple = None
    replicas: int = 1
    bin_width: float = 0.05
    window: tuple = (-1.5, 1.5)

    def __post_init__(self):
        if not is_attractive(self.params):
            raise ValueError(
                f"non-attractive parameters: c={self.params.c} > "
                f"(1-|d|)/2={(1 - abs(self.params.d)) / 2}"
            )
        if self.N < 10:
            raise ValueError(f"rescaling factor N must be >= 10, got {self.N}")
        if not (self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        for name, u in (("u_minus", self.u_minus), ("u_plus", self.u_plus)):
            if not (-1.0 <= u <= 1.0):
                raise ValueError(f"{name} must lie in [-1, 1], got {u}")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")
        if self.snapshot_times is None:
            object.__setattr__(self, "snapshot_times", (self.t_end,))
        else:
            times = tuple(sorted(self.snapshot_times))
            if times and (times[0] <= 0 or times[-1] > self.t_end + 1e-12):
                raise ValueError("snapshot times must lie in (0, t_end]")
            object.__setattr__(self, "snapshot_times", times)
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    # lattice geometry ----------------------------------------------------

    @property
    def pad_sites(self) -> int:
        # speed bound 1 on |G'| with safety factor 2, stretched by margin
        return int(math.ceil(2.0 * self.N * self.t_end * (1.0 + self.margin)))

    @property
    def lattice_length(self) -> int:
        xmin, xmax = self.window
        window_sites = int(math.ceil((xmax - xmin) * self.N)) + 1
        return window_sites + 2 * self.pad_sites + 2 * FROZEN_BOUNDARY

    @property
    def origin_index(self) -> int:
        xmin, _ = self.window
        return FROZEN_BOUNDARY + self.pad_sites + int(round(-xmin * self.N))


@dataclass(frozen=True)
class EmpiricalProfile:
    """Binned signed-density profile in macroscopic coordinates."""

    bin_centers: np.ndarray
    densities: np.ndarray
    replica_count: int
    time: float


@dataclass(frozen=True)
class CurrentRecord:
    """Integrated signed charge transferred across a bond up to `time`
    (microscopic units); every event at the bond moves +1 charge in the
    positive direction, annihilation included."""

    bond_index: int
    charge: int
    time: float


@dataclass(frozen=True)
class SimResult:
    profiles: tuple                 # replica-averaged EmpiricalProfile per snapshot
    currents: tuple                 # CurrentRecord per replica, final snapshot
    origin_charge: np.ndarray       # [replicas, snapshots] integrated charge
    per_replica_densities: np.ndarray  # [replicas, snapshots, bins]
    events: np.ndarray              # events per replica
    config: SimConfig


def bond_rate(left: int, right: int, params: ModelParams) -> float:
    """Jump rate of the move (left, right) -> (left-1, right+1)."""
    for v in (left, right):
        if v not in (-1, 0, 1):
            raise ValueError(f"occupation must lie in {{-1, 0, +1}}, got {v}")
    return _kernel.bond_rate_nb(left, right, params.c, params.d)


def apply_move(state: LatticeState, bond: int, params: ModelParams) -> LatticeState:
    """Apply the move at `bond` (sites bond, bond+1); the bond must carry
    positive rate."""
    sites = state.sites
    if not (0 <= bond < sites.size - 1):
        raise ValueError(f"bond {bond} outside lattice")
    if bond_rate(int(sites[bond]), int(sites[bond + 1]), params) <= 0.0:
        raise ValueError(f"move at bond {bond} has zero rate")
    new = sites.copy()
    new[bond] -= 1
    new[bond + 1] += 1
    return LatticeState(sites=new, origin_index=state.origin_index)


def _occupation_probs(u: float, params: ModelParams) -> np.ndarray:
    """(p_minus, p_zero, p_plus) of the product marginal at density u."""
    if u >= 1.0:
        return np.array([0.0, 0.0, 1.0])
    if u <= -1.0:
        return np.array([1.0, 0.0, 0.0])
    return marginal(theta_of_density(u, params), params).as_array()


def sample_initial(config: SimConfig, rng: np.random.Generator) -> LatticeState:
    """Product-measure step initial state: density u_minus at sites j <=
    origin, u_plus at j > origin. |u| = 1 degenerates to a deterministic
    fill."""
    L = config.lattice_length
    origin = config.origin_index
    sites = np.empty(L, dtype=np.int8)
    occupations = np.array([-1, 0, 1], dtype=np.int8)
    for sl, u in ((slice(0, origin + 1), config.u_minus),
                  (slice(origin + 1, L), config.u_plus)):
        n = sl.stop - sl.start
        probs = _occupation_probs(u, config.params)
        if probs.max() == 1.0:
            sites[sl] = occupations[int(np.argmax(probs))]
        else:
            sites[sl] = rng.choice(occupations, size=n, p=probs)
    return LatticeState(sites=sites, origin_index=origin)


def empirical_profile(state: LatticeState, config: SimConfig,
                      time: float) -> EmpiricalProfile:
    """Bin-averaged signed density over the observation window."""
    xmin, xmax = config.window
    n_bins = int(round((xmax - xmin) / config.bin_width))
    edges = xmin + config.bin_width * np.arange(n_bins + 1)
    x = (np.arange(state.sites.size) - state.origin_index) / config.N
    inside = (x >= edges[0]) & (x < edges[-1])
    idx = np.floor((x[inside] - xmin) / config.bin_width).astype(int)
    sums = np.bincount(idx, weights=state.sites[inside].astype(float),
                       minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    densities = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return EmpiricalProfile(bin_centers=centers, densities=densities,
                            replica_count=1, time=time)


def evolve_state(state: LatticeState, params: ModelParams, t_micro: float,
                 seed: int, bond_counts: np.ndarray = None) -> int:
    """Evolve a raw lattice in place for `t_micro` microscopic time units
    with every internal bond active and no boundary guard. Returns the
    number of events. Used directly for small-system validation."""
    if bond_counts is None:
        bond_counts = np.zeros(state.sites.size - 1, dtype=np.int64)
    _kernel.seed_rng(seed & 0x7FFFFFFF)
    _, n_events, _ = _kernel.evolve(
        state.sites, params.c, params.d, 0.0, t_micro,
        0, state.sites.size - 2, False, False, bond_counts,
    )
    return n_events


def _run_replica(config: SimConfig, init_seed_seq, kernel_seed: int):
    rng = np.random.default_rng(init_seed_seq)
    state = sample_initial(config, rng)
    sites = state.sites
    L = sites.size
    active_lo = FROZEN_BOUNDARY
    active_hi = L - FROZEN_BOUNDARY - 2
    guard_left = abs(config.u_minus) >= 1.0
    guard_right = abs(config.u_plus) >= 1.0
    bond_counts = np.zeros(L - 1, dtype=np.int64)
    origin_bond = config.origin_index

    _kernel.seed_rng(kernel_seed & 0x7FFFFFFF)
    charge_before = int(sites.sum())
    t = 0.0
    total_events = 0
    densities = []
    charges = []
    for t_snap in config.snapshot_times:
        t_stop = t_snap * config.N
        t, n_ev, status = _kernel.evolve(
            sites, config.params.c, config.params.d, t, t_stop,
            active_lo, active_hi, guard_left, guard_right, bond_counts,
        )
        total_events += n_ev
        if status != _kernel.OK:
            side = "left" if status == _kernel.BREACH_LEFT else "right"
            raise InfluenceConeBreachError(
                f"influence cone reached the {side} boundary at microscopic "
                f"time {t:.1f}; increase margin"
            )
        if int(sites.sum()) != charge_before:
            raise AssertionError("signed charge not conserved by the dynamics")
        prof = empirical_profile(LatticeState(sites, config.origin_index),
                                 config, t_snap)
        densities.append(prof.densities)
        charges.append(int(bond_counts[origin_bond]))
    return np.array(densities), np.array(charges), total_events


def worker_count() -> int:
    """Replica-level parallelism, capped by the NCR_THREADS env var
    (default: serial)."""
    import os

    try:
        return max(1, int(os.environ.get("NCR_THREADS", "1")))
    except ValueError:
        return 1


def _run_replica_job(job):
    config, child, kernel_seed = job
    return _run_replica(config, child, kernel_seed)


def run(config: SimConfig) -> SimResult:
    """Simulate `config.replicas` independent trajectories and aggregate.

    Each replica owns an RNG stream derived from (seed, replica index), so
    results are reproducible and independent of execution order and worker
    count.
    """
    children = np.random.SeedSequence(config.seed).spawn(config.replicas)
    jobs = [
        (config, child, int(child.generate_state(3, dtype=np.uint32)[2]))
        for child in children
    ]
    workers = min(worker_count(), config.replicas)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replica_job, jobs))
    else:
        results = [_run_replica_job(job) for job in jobs]

    all_densities = []
    all_charges = []
    events = np.zeros(config.replicas, dtype=np.int64)
    for r, (dens, charges, n_ev) in enumerate(results):
        all_densities.append(dens)
        all_charges.append(charges)
        events[r] = n_ev

    per_replica = np.array(all_densities)        # [replicas, snaps, bins]
    origin_charge = np.array(all_charges)        # [replicas, snaps]
    mean = per_replica.mean(axis=0)

    tmpl = empirical_profile(
        LatticeState(np.zeros(config.lattice_length, dtype=np.int8),
                     config.origin_index), config, 0.0)
    profiles = tuple(
        EmpiricalProfile(bin_centers=tmpl.bin_centers, densities=mean[k],
                         replica_count=config.replicas, time=t_snap)
        for k, t_snap in enumerate(config.snapshot_times)
    )
    currents = tuple(
        CurrentRecord(bond_index=config.origin_index,
                      charge=int(origin_charge[r, -1]),
                      time=config.snapshot_times[-1] * config.N)
        for r in range(config.replicas)
    )
    return SimResult(
        profiles=profiles, currents=currents, origin_charge=origin_charge,
        per_replica_densities=per_replica, events=events, config=config,
    )
