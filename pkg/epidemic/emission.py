"""
Probabilistic-logic program text for a compiled model.

``Mode.RELATIONAL`` keeps the variables ``X``, ``Y``, ``N``, ``M`` and reads
like a hand-written ProbLog model; ``Mode.GROUNDED`` replaces individuals and
timesteps by constants, one clause per line, so every probabilistic clause is
exactly one coin of the grounded model.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum

from .grounding import CoinKind, count_rule_instances, ground
from .specs import FileSource

logger = logging.getLogger(__name__)

INDENT = '    '


class Mode(str, Enum):
    RELATIONAL = 'relational'
    GROUNDED = 'grounded'


@dataclass(frozen=True)
class DataFiles:
    """CSV files a Relational program reads with ``csv_load``; ``None`` emits facts instead."""

    individuals: str | None = None
    contacts: str | None = None

    @classmethod
    def from_spec(cls, spec):
        """The paths as the model file names them."""
        population, contacts = spec.population_source, spec.contacts_source
        return cls(
            individuals=population.path if isinstance(population, FileSource) else None,
            contacts=contacts.path if isinstance(contacts, FileSource) and not spec.contacts_undirected else None,
        )


def atom_quoted(text):
    return "'" + str(text).replace("\\", "\\\\").replace("'", "\\'") + "'"


def atom(ident):
    """Prolog constant for an identifier, quoted unless it is a plain lowercase atom."""
    text = str(ident)
    if re.fullmatch(r'[a-z][A-Za-z0-9_]*', text):
        return text
    return atom_quoted(text)


def probability(p):
    return repr(float(p))


class _Names:
    def __init__(self, disease):
        self.susceptible = f"{disease}__susceptible"
        self.infected = f"{disease}__infected"
        self.recovered = f"{disease}__recovered"
        self.resistant = f"{disease}__resistant"


def _clause(head, *body_lines, p=None):
    """Multi-line clause; body lines are already comma-joined literal groups."""
    prefix = f"{probability(p)}::" if p is not None else ''
    if not body_lines:
        return [f"{prefix}{head}."]
    lines = [f"{prefix}{head} :-"]
    for i, body in enumerate(body_lines):
        end = '.' if i == len(body_lines) - 1 else ','
        lines.append(f"{INDENT}{body}{end}")
    return lines


# ============================================================
# RELATIONAL
# ============================================================

def _data_section(files, graph):
    lines = [":- use_module(library(db))."]
    facts = []
    if files.individuals is not None:
        lines.append(f":- csv_load({atom_quoted(files.individuals)},'person').")
    else:
        facts += [f"person({atom(x)})." for x in graph.individuals]
    if files.contacts is not None:
        lines.append(f":- csv_load({atom_quoted(files.contacts)},'airborne_contact').")
    else:
        facts += [
            f"airborne_contact({atom(e.target)},{atom(e.source)},{e.timestep})."
            for e in graph.sorted_events()
        ]
    return lines, facts


def _relational(spec, graph, seeds, files):
    d = _Names(spec.disease_name)
    directives, facts = _data_section(files, graph)
    out = directives + [''] + facts + ([''] if facts else [])

    out += _clause('time(N)', f"between(1,{spec.horizon},N)")
    out += _clause(f"{d.susceptible}(X,N)", 'time(N), person(X)')
    out += _clause(f"\\+{d.susceptible}(X,N)", f"time(N), {d.infected}(X,N)")
    out += _clause(
        f"{d.infected}(X,M)",
        f"time(M), N is M-1, \\+{d.infected}(X,N)",
        f"{d.susceptible}(X,N)",
        p=spec.external_prob)
    out += _clause(
        f"{d.infected}(X,M)",
        'time(M), N is M-1, airborne_contact(X,Y,N)',
        f"{d.susceptible}(X,N), {d.infected}(Y,N)",
        p=spec.transmission_prob)
    persistence = spec.persistence_prob if spec.persistence_prob < 1.0 else None
    out += _clause(f"{d.infected}(X,M)", f"time(M), N is M-1, {d.infected}(X,N)", p=persistence)
    if spec.infectious_period is not None:
        out += _clause(f"\\+{d.infected}(X,M)", f"time(M), N is M-{spec.infectious_period}, {d.infected}(X,N)")
    out += _clause(f"\\+{d.susceptible}(X,N)", f"time(N), {d.resistant}(X,N)")
    out += _clause(
        f"{d.recovered}(X,M)",
        f"time(M), N is M-1, {d.infected}(X,N)",
        f"\\+{d.infected}(X,M)")
    out += _clause(f"{d.resistant}(X,N)", f"time(N), {d.recovered}(X,N)", p=spec.immunity_prob)
    out += _clause(f"{d.resistant}(X,M)", f"time(M), N is M-1, {d.resistant}(X,N)")
    if spec.immunity_period is not None:
        out += _clause(
            f"\\+{d.resistant}(X,M)",
            f"time(M), N is M-{spec.immunity_period}, K is N-1",
            f"{d.resistant}(X,N), \\+{d.resistant}(X,K)")

    out += [f"{d.infected}({atom(x)},1)." for x in seeds]
    out.append('')
    out += [f"query({spec.disease_name}__{c.value}(X,N))." for c in spec.queries]
    return out


# ============================================================
# GROUNDED
# ============================================================

def _ground_clause(head, body=(), p=None):
    prefix = f"{probability(p)}::" if p is not None else ''
    if not body:
        return f"{prefix}{head}."
    return f"{prefix}{head} :- {', '.join(body)}."


def _grounded(spec, model):
    d = _Names(spec.disease_name)
    T = model.horizon
    coins = {}
    for coin in model.coins:
        coins.setdefault((coin.timestep, coin.subject), []).append(coin)

    out = [f"% {spec.disease_name}: {model.n} individuals, {T} timesteps, {len(model.coins)} coins"]
    out += [_ground_clause(f"{d.infected}({atom(x)},1)") for x in model.initial_infected]
    for t in range(1, T + 1):
        for x in model.individuals:
            a = atom(x)
            now = f"({a},{t})"
            prev = f"({a},{t - 1})"
            out.append(_ground_clause(f"{d.susceptible}{now}"))
            out.append(_ground_clause(f"\\+{d.susceptible}{now}", [f"{d.infected}{now}"]))
            out.append(_ground_clause(f"\\+{d.susceptible}{now}", [f"{d.resistant}{now}"]))
            for coin in coins.get((t, x), ()):
                if coin.kind is CoinKind.EXTERNAL:
                    body = [f"\\+{d.infected}{prev}", f"{d.susceptible}{prev}"]
                    out.append(_ground_clause(f"{d.infected}{now}", body, coin.probability))
                elif coin.kind is CoinKind.TRANSMISSION:
                    body = [f"{d.susceptible}{prev}", f"{d.infected}({atom(coin.source)},{t - 1})"]
                    out.append(_ground_clause(f"{d.infected}{now}", body, coin.probability))
                elif coin.kind is CoinKind.PERSISTENCE:
                    out.append(_ground_clause(f"{d.infected}{now}", [f"{d.infected}{prev}"], coin.probability))
                else:
                    out.append(_ground_clause(f"{d.resistant}{now}", [f"{d.recovered}{now}"], coin.probability))
            if t < 2:
                continue
            if not model.stochastic_persistence:
                out.append(_ground_clause(f"{d.infected}{now}", [f"{d.infected}{prev}"]))
            period = model.infectious_period
            if period is not None and t - period >= 1:
                out.append(_ground_clause(f"\\+{d.infected}{now}", [f"{d.infected}({a},{t - period})"]))
            out.append(_ground_clause(f"{d.recovered}{now}", [f"{d.infected}{prev}", f"\\+{d.infected}{now}"]))
            out.append(_ground_clause(f"{d.resistant}{now}", [f"{d.resistant}{prev}"]))
            k = model.immunity_period
            if k is not None and t - k >= 1:
                body = [f"{d.resistant}({a},{t - k})"]
                if t - k - 1 >= 1:
                    body.append(f"\\+{d.resistant}({a},{t - k - 1})")
                out.append(_ground_clause(f"\\+{d.resistant}{now}", body))
    out.append('')
    out += [
        f"query({spec.disease_name}__{c.value}({atom(x)},{t}))."
        for c in model.queries for x in model.individuals for t in range(1, T + 1)
    ]
    return out


def emit_program(spec, graph, mode=Mode.RELATIONAL, model=None, files=None):
    """
    Program text for (spec, graph); byte-stable for fixed inputs.

    ``files`` names the CSVs the graph was actually loaded from; without it the
    model file's own sources are referenced.
    """
    mode = Mode(mode)
    model = model or ground(spec, graph)
    if mode is Mode.RELATIONAL:
        lines = _relational(spec, graph, model.initial_infected, files if files is not None else DataFiles.from_spec(spec))
    else:
        lines = _grounded(spec, model)
        logger.debug(f"Grounded program: {len(model.coins)} coins, {count_rule_instances(model)} rule instances")
    return '\n'.join(lines) + '\n'
