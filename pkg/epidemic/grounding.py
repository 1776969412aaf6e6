"""
Time grounding.

``ground`` turns a ModelSpec and a TemporalContactGraph into an explicit model
with one independent Bernoulli "coin" per ground instance of each
probabilistic clause:

- External(x, t)        t in 2..T     infection from outside, gated on susceptible(x, t-1)
- Transmission(x, y, t) per contact (x <- y) at t-1, gated on susceptible(x, t-1) and infected(y, t-1)
- Persistence(x, t)     t in 2..T     only when persistence_prob < 1
- Immunity(x, t)        t in 1..T     consulted only where recovered(x, t) holds

Coins exist whether or not their bodies can ever hold.
"""

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np

from .exceptions import GroundingError

logger = logging.getLogger(__name__)


class CoinKind(IntEnum):
    EXTERNAL = 0
    TRANSMISSION = 1
    PERSISTENCE = 2
    IMMUNITY = 3


@dataclass(frozen=True)
class Coin:
    kind: CoinKind
    subject: str
    timestep: int
    source: str | None
    probability: float

    @property
    def sort_key(self):
        return (self.kind, self.subject, self.source or '', self.timestep)


@dataclass(frozen=True)
class ContactPlan:
    """Contacts at timestep t-1 that act at t, ordered by (target, source) index."""

    targets: np.ndarray
    sources: np.ndarray
    incidence: np.ndarray  # (events, n): row e has a single 1 at targets[e]

    @property
    def size(self):
        return len(self.targets)


def _empty_plan(n):
    return ContactPlan(np.zeros(0, np.intp), np.zeros(0, np.intp), np.zeros((0, n), np.int32))


@dataclass(frozen=True)
class GroundedModel:
    disease_name: str
    horizon: int
    individuals: tuple
    coins: tuple
    external_prob: float
    transmission_prob: float
    persistence_prob: float
    immunity_prob: float
    infectious_period: int | None
    immunity_period: int | None
    initial_infected: tuple
    queries: tuple
    plans: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return len(self.individuals)

    @cached_property
    def index(self):
        return {ident: i for i, ident in enumerate(self.individuals)}

    @cached_property
    def seed_mask(self):
        mask = np.zeros(self.n, dtype=bool)
        mask[np.array([self.index[s] for s in self.initial_infected], dtype=np.intp)] = True
        return mask

    @property
    def stochastic_persistence(self):
        return self.persistence_prob < 1.0

    @cached_property
    def _no_contacts(self):
        return _empty_plan(self.n)

    def plan(self, t):
        """Contacts acting at step ``t``."""
        return self.plans.get(t, self._no_contacts)

    def coin_counts(self):
        counts = dict.fromkeys(CoinKind, 0)
        for coin in self.coins:
            counts[coin.kind] += 1
        return counts


def count_rule_instances(model):
    """
    Ground instances of the deterministic clauses (no coin attached): per
    individual the default susceptibility and its two inhibitors at every step,
    then from t=2 recovery, immunity persistence, infection persistence when it
    is certain, and the period and expiry inhibitors where ``t - period >= 1``.
    Seed facts count too.
    """
    T = model.horizon
    per_individual = 3 * T + 2 * (T - 1)
    if not model.stochastic_persistence:
        per_individual += T - 1
    for period in (model.infectious_period, model.immunity_period):
        if period is not None:
            per_individual += max(0, T - period)
    return model.n * per_individual + len(model.initial_infected)


def _seeds(spec, individuals):
    wanted = spec.initial_infected
    if isinstance(wanted, int):
        if wanted > len(individuals):
            raise GroundingError(
                f"cannot seed {wanted} infections in a population of {len(individuals)}", code='TooManySeeds')
        return individuals[:wanted]
    known = set(individuals)
    for ident in wanted:
        if ident not in known:
            raise GroundingError(f"initial infected {ident!r} is not in the population", code='UnknownSeedIndividual')
    return tuple(sorted(wanted))


def _plan(events, index, n):
    targets = np.array([index[e.target] for e in events], dtype=np.intp)
    sources = np.array([index[e.source] for e in events], dtype=np.intp)
    incidence = np.zeros((len(events), n), dtype=np.int32)
    incidence[np.arange(len(events)), targets] = 1
    return ContactPlan(targets, sources, incidence)


def ground(spec, graph):
    """Compile (spec, graph) into a GroundedModel with deterministically ordered coins."""
    individuals = tuple(graph.individuals)
    if not individuals:
        raise GroundingError('cannot ground a model without individuals', code='EmptyPopulation')
    seeds = _seeds(spec, individuals)
    horizon = spec.horizon
    steps = range(2, horizon + 1)

    coins = [Coin(CoinKind.EXTERNAL, x, t, None, spec.external_prob) for x in individuals for t in steps]
    coins += [
        Coin(CoinKind.TRANSMISSION, e.target, e.timestep + 1, e.source, spec.transmission_prob)
        for e in graph.events if e.timestep <= horizon - 1
    ]
    if spec.persistence_prob < 1.0:
        coins += [Coin(CoinKind.PERSISTENCE, x, t, None, spec.persistence_prob) for x in individuals for t in steps]
    coins += [Coin(CoinKind.IMMUNITY, x, t, None, spec.immunity_prob) for x in individuals for t in range(1, horizon + 1)]
    coins.sort(key=lambda c: c.sort_key)

    index = {ident: i for i, ident in enumerate(individuals)}
    plans = {t: _plan(graph.events_at(t - 1), index, len(individuals)) for t in steps if graph.events_at(t - 1)}

    model = GroundedModel(
        disease_name=spec.disease_name,
        horizon=horizon,
        individuals=individuals,
        coins=tuple(coins),
        external_prob=spec.external_prob,
        transmission_prob=spec.transmission_prob,
        persistence_prob=spec.persistence_prob,
        immunity_prob=spec.immunity_prob,
        infectious_period=spec.infectious_period,
        immunity_period=spec.immunity_period,
        initial_infected=seeds,
        queries=tuple(spec.queries),
        plans=plans,
    )
    counts = model.coin_counts()
    logger.info(
        f"Grounded {len(individuals)} individuals over {horizon} steps: "
        + ', '.join(f"{kind.name.lower()}={count}" for kind, count in counts.items())
    )
    return model
