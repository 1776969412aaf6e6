"""
Simulation engine for grounded models.

State semantics, evaluated per step t >= 2 in this order:

1. infected(x,t) is the noisy-or of its causes: External (gated on
   susceptible(x,t-1)), one Transmission per contact (x <- y, t-1) (gated on
   susceptible(x,t-1) and infected(y,t-1)) and Persistence (gated on
   infected(x,t-1); deterministic when persistence_prob is 1).
2. With a bounded infectious period d, infected(x,t-d) forces infected(x,t)
   false whatever the causes.
3. recovered(x,t) = infected(x,t-1) and not infected(x,t).
4. resistant(x,t) = kept resistance (lapses k steps after acquisition when
   immunity is bounded) or recovered(x,t) with a firing Immunity coin.
5. susceptible(x,t) = not infected and not resistant.

All state arrays carry optional leading batch axes so the same step
functions drive one sampled run or every coin assignment of the exact
enumeration at once.
"""

import concurrent.futures
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from tqdm import tqdm

from .exceptions import SimulationError
from .grounding import CoinKind
from .specs import COMPARTMENTS, Compartment

logger = logging.getLogger(__name__)


def noisy_or(probs):
    """1 - prod(1 - p) over independent causes."""
    p = np.asarray(list(probs), dtype=float)
    if p.size == 0:
        return 0.0
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise SimulationError(f"probabilities must lie in [0,1], got {p.tolist()}", code='OutOfRange')
    # sorted so the float product does not depend on input order
    return float(1.0 - np.prod(np.sort(1.0 - p)))


# ============================================================
# STATE
# ============================================================

@dataclass(frozen=True)
class CompartmentState:
    timestep: int
    infected: np.ndarray
    resistant: np.ndarray
    recovered: np.ndarray
    history: np.ndarray  # (..., window, n): history[..., k, :] is infected at timestep - k
    resistant_since: np.ndarray  # step resistance was acquired, 0 where not resistant

    @property
    def susceptible(self):
        return ~self.infected & ~self.resistant


@dataclass(frozen=True)
class StepCoins:
    """Coin outcomes at one step; ``persistence=None`` means persistence is certain."""

    external: np.ndarray
    transmission: np.ndarray
    persistence: np.ndarray | None
    immunity: np.ndarray


def initial_state(model, batch_shape=()):
    n = model.n
    infected = np.broadcast_to(model.seed_mask, batch_shape + (n,)).copy()
    window = model.infectious_period or 0
    history = np.zeros(batch_shape + (window, n), dtype=bool)
    if window:
        history[..., 0, :] = infected
    return CompartmentState(
        timestep=1,
        infected=infected,
        resistant=np.zeros(batch_shape + (n,), dtype=bool),
        recovered=np.zeros(batch_shape + (n,), dtype=bool),
        history=history,
        resistant_since=np.zeros(batch_shape + (n,), dtype=np.int64),
    )


def resolve_infection(state, model, t, external, transmission, persistence):
    """Steps 1-2: who is infected at ``t``."""
    susceptible = state.susceptible
    plan = model.plan(t)
    infected = external & susceptible
    if plan.size:
        hits = transmission & susceptible[..., plan.targets] & state.infected[..., plan.sources]
        infected = infected | ((hits.astype(np.int32) @ plan.incidence) > 0)
    infected = infected | (state.infected if persistence is None else state.infected & persistence)
    d = model.infectious_period
    if d is not None:
        infected = infected & ~state.history[..., d - 1, :]
    return infected


def resolve_recovery(state, model, t, infected, immunity):
    """Steps 3-5 given the infections at ``t``."""
    recovered = state.infected & ~infected
    kept = state.resistant
    k = model.immunity_period
    if k is not None:
        kept = kept & (state.resistant_since + k > t)
    gained = recovered & immunity
    resistant = kept | gained
    since = np.where(gained, t, np.where(kept, state.resistant_since, 0))
    history = state.history
    if history.shape[-2]:
        history = np.concatenate([infected[..., None, :], history[..., :-1, :]], axis=-2)
    return CompartmentState(t, infected, resistant, recovered, history, since)


def advance_step(state, model, t, coins):
    """State at ``t`` from the state at ``t-1`` and every coin outcome at ``t``."""
    if not 2 <= t <= model.horizon or state.timestep != t - 1:
        raise SimulationError(f"cannot advance from step {state.timestep} to {t}", code='OutOfRange')
    infected = resolve_infection(state, model, t, coins.external, coins.transmission, coins.persistence)
    return resolve_recovery(state, model, t, infected, coins.immunity)


# ============================================================
# MONTE CARLO
# ============================================================

@dataclass(frozen=True)
class Trajectory:
    """One run: (horizon, n) grids, row t-1 holding timestep t."""

    run_index: int
    seed: int
    individuals: tuple
    infected: np.ndarray
    resistant: np.ndarray
    recovered: np.ndarray

    @property
    def susceptible(self):
        return ~self.infected & ~self.resistant

    @property
    def horizon(self):
        return self.infected.shape[0]

    def grid(self, compartment):
        return getattr(self, Compartment(compartment).value)

    def counts(self):
        """(horizon, 4) integer counts in COMPARTMENTS order."""
        return np.stack([self.grid(c).sum(axis=1) for c in COMPARTMENTS], axis=1)


def run_generator(master_seed, run_index):
    """Independent, addressable stream per run (counter-based Philox)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, run_index])))


def _draw(rng, gate, p):
    if p <= 0.0:
        return np.zeros_like(gate)
    if p >= 1.0:
        return gate.copy()
    fired = np.zeros_like(gate)
    idx = np.flatnonzero(gate)
    fired[idx] = rng.random(idx.size) < p
    return fired


def run_simulation(model, run_index, master_seed):
    """
    Sample one trajectory.

    Only coins whose gates hold are drawn, kind by kind in coin order
    (External, Transmission, Persistence, then Immunity once recoveries are
    known), one uniform per coin. Coins with probability 0 or 1 consume no
    randomness.
    """
    rng = run_generator(master_seed, run_index)
    T, n = model.horizon, model.n
    infected = np.zeros((T, n), dtype=bool)
    resistant = np.zeros((T, n), dtype=bool)
    recovered = np.zeros((T, n), dtype=bool)

    state = initial_state(model)
    infected[0] = state.infected
    for t in range(2, T + 1):
        plan = model.plan(t)
        susceptible = state.susceptible
        external = _draw(rng, susceptible, model.external_prob)
        transmission = _draw(
            rng, susceptible[plan.targets] & state.infected[plan.sources], model.transmission_prob)
        persistence = _draw(rng, state.infected, model.persistence_prob) if model.stochastic_persistence else None
        now_infected = resolve_infection(state, model, t, external, transmission, persistence)
        immunity = _draw(rng, state.infected & ~now_infected, model.immunity_prob)
        state = resolve_recovery(state, model, t, now_infected, immunity)
        infected[t - 1] = state.infected
        resistant[t - 1] = state.resistant
        recovered[t - 1] = state.recovered

    return Trajectory(run_index, master_seed, model.individuals, infected, resistant, recovered)


def run_simulations(model, runs, master_seed, workers=1, progress=False):
    """Runs 0..runs-1, ordered by run index whatever ``workers`` is."""
    if runs < 1:
        raise SimulationError(f"need at least one run, got {runs}", code='ZeroRuns')
    indices = range(runs)
    simulate = lambda k: run_simulation(model, k, master_seed)  # noqa: E731
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            results = executor.map(simulate, indices)
            trajectories = list(tqdm(results, total=runs, desc='runs', disable=not progress))
    else:
        trajectories = [simulate(k) for k in tqdm(indices, desc='runs', disable=not progress)]
    logger.info(f"Completed {runs} runs (seed {master_seed}, {workers} worker(s))")
    return trajectories


# ============================================================
# MARGINALS
# ============================================================

class Method(str, Enum):
    EXACT = 'exact'
    MONTE_CARLO = 'montecarlo'


@dataclass(frozen=True)
class MarginalTable:
    """P(compartment(individual, t)); ``values[c]`` is a (horizon, n) array."""

    individuals: tuple
    values: dict
    queries: tuple
    method: Method
    runs: int | None = None

    @property
    def horizon(self):
        return next(iter(self.values.values())).shape[0]

    def probability(self, compartment, individual, timestep):
        compartment = Compartment(compartment)
        return float(self.values[compartment][timestep - 1, self.individuals.index(individual)])

    def __getitem__(self, key):
        return self.probability(*key)

    def items(self):
        """((compartment, individual, t), p) over queried atoms, compartment-major."""
        for compartment in self.queries:
            grid = self.values[compartment]
            for i, individual in enumerate(self.individuals):
                for t in range(1, grid.shape[0] + 1):
                    yield (compartment, individual, t), float(grid[t - 1, i])


def mc_marginals(model, runs, master_seed, workers=1, progress=False):
    """Empirical frequency of every atom over runs 0..runs-1."""
    if runs < 1:
        raise SimulationError(f"need at least one run, got {runs}", code='ZeroRuns')
    totals = {c: np.zeros((model.horizon, model.n)) for c in COMPARTMENTS}
    for trajectory in run_simulations(model, runs, master_seed, workers, progress):
        for c in COMPARTMENTS:
            totals[c] += trajectory.grid(c)
    values = {c: totals[c] / runs for c in COMPARTMENTS}
    return MarginalTable(model.individuals, values, model.queries, Method.MONTE_CARLO, runs)


@dataclass(frozen=True)
class _CoinSlot:
    step: int
    kind: CoinKind
    position: int  # subject index, or contact index for Transmission


def _slot(model, coin):
    if coin.kind is CoinKind.TRANSMISSION:
        plan = model.plan(coin.timestep)
        target, source = model.index[coin.subject], model.index[coin.source]
        position = int(np.flatnonzero((plan.targets == target) & (plan.sources == source))[0])
    else:
        position = model.index[coin.subject]
    return _CoinSlot(coin.timestep, coin.kind, position)


class _Enumerator:
    """Propagates blocks of coin assignments; free coins are bit columns."""

    def __init__(self, model, free):
        self.model = model
        self.free = free
        self.probs = np.array([model.coins[i].probability for i in free])
        self.constants = {}
        self.columns = {}
        for t in range(2, model.horizon + 1):
            size = {
                CoinKind.EXTERNAL: model.n,
                CoinKind.TRANSMISSION: model.plan(t).size,
                CoinKind.PERSISTENCE: model.n,
                CoinKind.IMMUNITY: model.n,
            }
            for kind, length in size.items():
                self.constants[t, kind] = np.zeros(length, dtype=bool)
                self.columns[t, kind] = ([], [])
        column_of = {coin_index: column for column, coin_index in enumerate(free)}
        for i, coin in enumerate(model.coins):
            if coin.timestep < 2:
                continue
            slot = _slot(model, coin)
            if i in column_of:
                bits, positions = self.columns[slot.step, slot.kind]
                bits.append(column_of[i])
                positions.append(slot.position)
            elif coin.probability >= 1.0:
                self.constants[slot.step, slot.kind][slot.position] = True
        self.columns = {key: (np.array(b, dtype=np.intp), np.array(p, dtype=np.intp)) for key, (b, p) in self.columns.items()}

    def _coins(self, bits, t, kind):
        base = np.broadcast_to(self.constants[t, kind], (bits.shape[0],) + self.constants[t, kind].shape).copy()
        columns, positions = self.columns[t, kind]
        if columns.size:
            base[:, positions] = bits[:, columns]
        return base

    def block(self, start, size):
        """Weighted compartment sums over assignments start..start+size-1."""
        model = self.model
        count = len(self.free)
        index = np.arange(start, start + size, dtype=np.int64)
        bits = ((index[:, None] >> np.arange(count, dtype=np.int64)) & 1).astype(bool)
        weights = np.prod(np.where(bits, self.probs, 1.0 - self.probs), axis=1)

        sums = {c: np.zeros((model.horizon, model.n)) for c in COMPARTMENTS}
        state = initial_state(model, (size,))

        def accumulate(s, t):
            for c in COMPARTMENTS:
                sums[c][t - 1] = weights @ getattr(s, c.value).astype(float)

        accumulate(state, 1)
        for t in range(2, model.horizon + 1):
            coins = StepCoins(
                external=self._coins(bits, t, CoinKind.EXTERNAL),
                transmission=self._coins(bits, t, CoinKind.TRANSMISSION),
                persistence=self._coins(bits, t, CoinKind.PERSISTENCE) if model.stochastic_persistence else None,
                immunity=self._coins(bits, t, CoinKind.IMMUNITY),
            )
            state = advance_step(state, model, t, coins)
            accumulate(state, t)
        return sums


def exact_marginals(model, max_coins=24, chunk_bits=16, workers=1):
    """
    Exact marginals by enumerating every assignment of the coins from step 2
    on whose probability is strictly between 0 and 1; the others are constants.

    The 2^C assignments are split into blocks of 2^chunk_bits whose partial
    sums are combined in block order, so ``workers > 1`` gives a bitwise
    identical table.
    """
    # immunity coins at t=1 have no recovery to act on
    free = [i for i, coin in enumerate(model.coins) if coin.timestep >= 2 and 0.0 < coin.probability < 1.0]
    if len(free) > max_coins:
        raise SimulationError(
            f"{len(free)} probabilistic coins exceed the exact-inference cap of {max_coins}; use Monte Carlo",
            code='TooLarge')
    enumerator = _Enumerator(model, free)
    size = 2 ** min(len(free), chunk_bits)
    starts = range(0, 2 ** len(free), size)
    block = lambda start: enumerator.block(start, size)  # noqa: E731

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            partials = list(executor.map(block, starts))
    else:
        partials = [block(start) for start in starts]

    values = {c: np.zeros((model.horizon, model.n)) for c in COMPARTMENTS}
    for partial in partials:
        for c in COMPARTMENTS:
            values[c] += partial[c]
    logger.info(f"Exact enumeration over {len(free)} coins ({len(partials)} blocks)")
    return MarginalTable(model.individuals, values, model.queries, Method.EXACT)
