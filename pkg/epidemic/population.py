"""
Individuals and time-stamped contacts.

CSV dialect for both files: UTF-8, no header, comma separated, no quoting.
``individualsList``: one column ``id``. ``contactList``: ``target,source,timestep``
where ``source`` may infect ``target`` through a contact at ``timestep``.
"""

import csv
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np

from .exceptions import PopulationDataError
from .specs import Regime

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class ContactEvent:
    target: str
    source: str
    timestep: int

    def __post_init__(self):
        if self.timestep < 1:
            raise PopulationDataError(f"contact timestep {self.timestep} must be >= 1", code='NonPositiveTimestep')
        if self.target == self.source:
            raise PopulationDataError(f"self-contact of {self.target!r}", code='MalformedRow')


@dataclass(frozen=True)
class TemporalContactGraph:
    individuals: tuple
    events: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if list(self.individuals) != sorted(set(self.individuals)):
            raise PopulationDataError('individuals must be unique and sorted', code='MalformedRow')
        known = set(self.individuals)
        for event in self.events:
            for endpoint in (event.target, event.source):
                if endpoint not in known:
                    raise PopulationDataError(f"unknown individual {endpoint!r} in contact", code='UnknownIndividual')

    @cached_property
    def by_timestep(self):
        """timestep -> events sorted by (target, source)."""
        grouped = defaultdict(list)
        for event in sorted(self.events):
            grouped[event.timestep].append(event)
        return {t: tuple(sorted(events, key=lambda e: (e.target, e.source))) for t, events in sorted(grouped.items())}

    def events_at(self, timestep):
        return self.by_timestep.get(timestep, ())

    def sorted_events(self):
        return sorted(self.events)


# ============================================================
# LOADING
# ============================================================

# undecodable bytes survive decoding as lone surrogates
_UNDECODABLE = re.compile('[\udc80-\udcff]')


def _text(source):
    if isinstance(source, bytes):
        return io.StringIO(source.decode('utf-8-sig', errors='surrogateescape'), newline='')
    if isinstance(source, str):
        return io.StringIO(source.removeprefix('\ufeff'), newline='')
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding='utf-8-sig', errors='surrogateescape', newline='')


def _rows(source):
    """Non-blank rows with their 1-based line numbers."""
    number = 0
    try:
        reader = csv.reader(_text(source), delimiter=',', quoting=csv.QUOTE_NONE)
        for number, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if any(_UNDECODABLE.search(cell) for cell in row):
                raise PopulationDataError(f"line {number}: not UTF-8 text", code='MalformedRow')
            yield number, [cell.strip() for cell in row]
    except (UnicodeDecodeError, csv.Error) as e:
        raise PopulationDataError(f"line {number + 1}: unreadable row ({e})", code='MalformedRow') from None


def load_individuals(source):
    """Ids from the first column, deduplicated with a warning, sorted lexicographically."""
    ids = set()
    for number, row in _rows(source):
        ident = row[0]
        if not ident or not ident.isprintable() or any(ch.isspace() for ch in ident):
            raise PopulationDataError(f"line {number}: invalid individual id {ident!r}", code='MalformedRow')
        if ident in ids:
            logger.warning(f"line {number}: duplicate individual {ident!r} ignored")
            continue
        ids.add(ident)
    if not ids:
        raise PopulationDataError('individuals file lists no individuals', code='EmptyFile')
    logger.info(f"Loaded {len(ids)} individuals")
    return tuple(sorted(ids))


def load_contacts(source, known_ids, undirected=False, horizon=None):
    """
    Contact events from ``target,source,timestep`` rows.

    With ``undirected`` every row also yields its reverse. Rows at timesteps
    beyond ``horizon - 1`` are kept but can never cause an infection, so they
    are reported.
    """
    known = set(known_ids)
    if not known:
        raise PopulationDataError('contacts need a non-empty population', code='EmptyFile')
    events = set()
    late = 0
    for number, row in _rows(source):
        if len(row) != 3:
            raise PopulationDataError(f"line {number}: expected target,source,timestep, got {len(row)} columns", code='MalformedRow')
        target, src, raw_t = row
        for ident in (target, src):
            if ident not in known:
                raise PopulationDataError(f"line {number}: unknown individual {ident!r}", code='UnknownIndividual')
        try:
            timestep = int(raw_t)
        except ValueError:
            raise PopulationDataError(f"line {number}: timestep {raw_t!r} is not an integer", code='MalformedRow') from None
        if timestep < 1:
            raise PopulationDataError(f"line {number}: timestep {timestep} must be positive", code='NonPositiveTimestep')
        if target == src:
            raise PopulationDataError(f"line {number}: self-contact of {target!r}", code='MalformedRow')

        event = ContactEvent(target, src, timestep)
        if event in events:
            logger.warning(f"line {number}: duplicate contact {target},{src},{timestep} ignored")
        events.add(event)
        if undirected:
            events.add(ContactEvent(src, target, timestep))
        if horizon is not None and timestep > horizon - 1:
            late += 1

    if late:
        logger.warning(f"{late} contact rows at timesteps beyond {horizon - 1} can never cause an infection")
    logger.info(f"Loaded {len(events)} contact events")
    return frozenset(events)


def read_individuals(path):
    with open(path, 'rb') as f:
        return load_individuals(f)


def read_contacts(path, known_ids, undirected=False, horizon=None):
    with open(path, 'rb') as f:
        return load_contacts(f, known_ids, undirected, horizon)


# ============================================================
# GENERATION
# ============================================================

def _graph_seed(seed_sequence):
    return int(seed_sequence.generate_state(1, np.uint32)[0])


def generate_contacts(individuals, edge_prob, regime, horizon, seed):
    """
    Erdős–Rényi contacts over ``individuals`` for timesteps 1..horizon-1.

    Each unordered pair is included with ``edge_prob`` and stored as two
    directed events. ``Static`` decides once and repeats the pairs every
    timestep; ``PerTimestep`` decides again at each timestep.
    """
    n = len(individuals)
    timesteps = range(1, horizon)
    root = np.random.SeedSequence(seed)
    if regime is Regime.STATIC:
        graphs = dict.fromkeys(timesteps, nx.gnp_random_graph(n, edge_prob, seed=_graph_seed(root.spawn(1)[0])))
    else:
        children = root.spawn(len(timesteps))
        graphs = {t: nx.gnp_random_graph(n, edge_prob, seed=_graph_seed(child)) for t, child in zip(timesteps, children)}

    events = set()
    for t, graph in graphs.items():
        for u, v in graph.edges():
            events.add(ContactEvent(individuals[u], individuals[v], t))
            events.add(ContactEvent(individuals[v], individuals[u], t))
    return frozenset(events)


def random_individuals(n):
    return tuple(sorted(f"p{i}" for i in range(1, n + 1)))


def generate_random(n, edge_prob, regime, horizon, seed):
    """Population ``p1..pn`` with random contacts; a pure function of its arguments."""
    if n < 1:
        raise PopulationDataError(f"population size {n} must be positive", code='EmptyFile')
    individuals = random_individuals(n)
    events = generate_contacts(individuals, edge_prob, regime, horizon, seed)
    logger.info(f"Generated {n} individuals and {len(events)} contact events ({regime.value})")
    return TemporalContactGraph(individuals, events)


# ============================================================
# WRITING
# ============================================================

def write_individuals(individuals, stream):
    writer = csv.writer(stream, lineterminator='\n')
    for ident in individuals:
        writer.writerow([ident])


def write_contacts(events, stream):
    """Rows sorted by (target, source, timestep)."""
    writer = csv.writer(stream, lineterminator='\n')
    for event in sorted(events):
        writer.writerow([event.target, event.source, event.timestep])
