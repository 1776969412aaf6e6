"""
Model-file language.

One statement per line, ``<subject> <key> <value>`` in the shape of::

    infected transmission 0.8
    infected external 0.1
    infected period 7

``#`` starts a comment, keywords are case-insensitive, values keep their case.
Defaults files use the same grammar.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

import pyparsing as pp
from pydantic import ValidationError

from .exceptions import DslError
from .specs import (
    COMPARTMENTS,
    Compartment,
    FileSource,
    ModelFragment,
    ModelSpec,
    RandomContacts,
    RandomPopulation,
    Regime,
)

logger = logging.getLogger(__name__)

UINT64_MAX = 2**64 - 1


class Severity(str, Enum):
    ERROR = 'error'
    WARNING = 'warning'


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    line: int
    message: str
    token: str = ''
    code: str = 'MalformedStatement'

    def __str__(self):
        return f"line {self.line}: {self.severity.value}: {self.message}"


@dataclass(frozen=True)
class ParseResult:
    fragment: ModelFragment
    diagnostics: tuple = ()

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def warnings(self):
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]

    @property
    def ok(self):
        return not self.errors


# ============================================================
# GRAMMAR
# ============================================================

_WORD = pp.Regex(r'[^\s#]+')
_LINE = pp.ZeroOrMore(_WORD) + pp.Optional(pp.python_style_comment).suppress()

_INTEGER = pp.Regex(r'[+-]?\d+').set_name('integer')
_DECIMAL = pp.Regex(r'[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?').set_name('decimal number')
_TOKEN = pp.Regex(r'[^\s#]+').set_name('token')
_ID_LIST = pp.Regex(r'[^\s,#]+(?:,[^\s,#]+)*').set_name('count or comma-separated ids')
_UNBOUNDED = pp.CaselessKeyword('unbounded')
_PERMANENT = pp.CaselessKeyword('permanent')
_REGIME = pp.one_of('static perstep', caseless=True).set_name("'static' or 'perstep'")
_COMPARTMENT = pp.one_of(' '.join(c.value for c in COMPARTMENTS), caseless=True).set_name('compartment')


def _probability(tokens):
    value = float(tokens[0])
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"probability {tokens[0]} outside [0,1]")
    return value


def _positive(tokens):
    value = int(tokens[0])
    if value < 1:
        raise ValueError(f"{tokens[0]} must be a positive integer")
    return value


def _period(tokens):
    if tokens[0].lower() in ('unbounded', 'permanent'):
        return None
    return _positive(tokens)


def _seed(tokens):
    value = int(tokens[0])
    if not 0 <= value <= UINT64_MAX:
        raise ValueError(f"seed {tokens[0]} outside 0..2^64-1")
    return value


def _initial(tokens):
    items = tokens[0].split(',')
    if len(items) == 1 and re.fullmatch(r'[+-]?\d+', items[0]):
        value = int(items[0])
        if value < 0:
            raise ValueError(f"initial count {items[0]} must not be negative")
        return value
    if len(set(items)) != len(items):
        raise ValueError(f"repeated id in {tokens[0]}")
    return tuple(items)


def _disease(tokens):
    name = tokens[0]
    if not re.fullmatch(r'[a-z][A-Za-z0-9_]*', name):
        raise ValueError(f"disease name {name!r} must start lowercase and use letters, digits or _")
    return name


def _population_random(tokens):
    return RandomPopulation(n=_positive(tokens))


def _contacts_random(tokens):
    return RandomContacts(edge_prob=_probability(tokens), regime=Regime(tokens[1].lower()))


def _file(tokens):
    return FileSource(path=tokens[0])


def _query(tokens):
    return Compartment(tokens[0].lower())


@dataclass(frozen=True)
class _Statement:
    field: str
    grammar: pp.ParserElement
    convert: object
    usage: str


_STATEMENTS = {
    ('infected', 'transmission'): _Statement('transmission_prob', _DECIMAL, _probability, '<prob>'),
    ('infected', 'external'): _Statement('external_prob', _DECIMAL, _probability, '<prob>'),
    ('infected', 'period'): _Statement('infectious_period', _INTEGER | _UNBOUNDED, _period, "<posint> | unbounded"),
    ('infected', 'persistence'): _Statement('persistence_prob', _DECIMAL, _probability, '<prob>'),
    ('infected', 'initial'): _Statement('initial_infected', _ID_LIST, _initial, '<count> | <id,id,...>'),
    ('resistant', 'probability'): _Statement('immunity_prob', _DECIMAL, _probability, '<prob>'),
    ('resistant', 'period'): _Statement('immunity_period', _INTEGER | _PERMANENT, _period, '<posint> | permanent'),
    ('disease',): _Statement('disease_name', _TOKEN, _disease, '<name>'),
    ('simulation', 'runs'): _Statement('runs', _INTEGER, _positive, '<posint>'),
    ('simulation', 'horizon'): _Statement('horizon', _INTEGER, _positive, '<posint>'),
    ('simulation', 'seed'): _Statement('seed', _INTEGER, _seed, '<uint64>'),
    ('population', 'file'): _Statement('population_source', _TOKEN, _file, '<path>'),
    ('population', 'random'): _Statement('population_source', _INTEGER, _population_random, '<posint>'),
    ('contacts', 'file'): _Statement('contacts_source', _TOKEN, _file, '<path>'),
    ('contacts', 'random'): _Statement('contacts_source', _DECIMAL + _REGIME, _contacts_random, '<prob> static|perstep'),
    ('contacts', 'undirected'): _Statement('contacts_undirected', pp.Empty(), lambda tokens: True, ''),
    ('query',): _Statement('queries', _COMPARTMENT, _query, 'susceptible|infected|recovered|resistant'),
}

SUBJECTS = sorted({key[0] for key in _STATEMENTS})


def statement_usage():
    """One usage line per statement, for ``help``."""
    return [' '.join(key + ((stmt.usage,) if stmt.usage else ())) for key, stmt in _STATEMENTS.items()]


# ============================================================
# PARSING
# ============================================================

def _lookup(words):
    """Return (statement key, value words) or raise LookupError(code, token, message)."""
    head = words[0].lower()
    if len(words) > 1 and (head, words[1].lower()) in _STATEMENTS:
        return (head, words[1].lower()), words[2:]
    if (head,) in _STATEMENTS:
        return (head,), words[1:]
    if head not in SUBJECTS:
        raise LookupError('UnknownKey', words[0], f"unknown compartment or statement {words[0]!r}")
    if len(words) == 1:
        raise LookupError('MalformedStatement', words[0], f"'{head}' needs a key")
    raise LookupError('UnknownKey', words[1], f"unknown key {words[1]!r} for '{head}'")


def parse_model(text):
    """
    Parse model or defaults text into a fragment plus diagnostics.

    Each valid statement sets exactly one field. Errors never raise; check
    ``ParseResult.ok``.
    """
    values = {}
    set_on_line = {}
    queries = []
    diagnostics = []

    for number, raw in enumerate(text.splitlines(), start=1):
        def report(code, token, message, severity=Severity.ERROR):
            diagnostics.append(ParseDiagnostic(severity, number, message, token, code))

        try:
            words = list(_LINE.parse_string(raw, parse_all=True))
        except pp.ParseException as e:
            report('MalformedStatement', raw.strip(), f"cannot tokenize line: {e.msg}")
            continue
        if not words:
            continue

        try:
            key, rest = _lookup(words)
        except LookupError as e:
            code, token, message = e.args
            report(code, token, message)
            continue

        statement = _STATEMENTS[key]
        label = ' '.join(key)
        try:
            tokens = statement.grammar.parse_string(' '.join(rest), parse_all=True)
        except pp.ParseException:
            found = ' '.join(rest) or '<nothing>'
            report('MalformedStatement', found, f"'{label}' expects {statement.usage or 'no value'}, got {found!r}")
            continue
        try:
            value = statement.convert(tokens)
        except ValueError as e:
            report('OutOfRange', ' '.join(rest), str(e))
            continue

        if statement.field == 'queries':
            if value in queries:
                report('DuplicateKey', value.value, f"duplicate query {value.value!r}")
                continue
            queries.append(value)
            continue
        if statement.field in values:
            report('DuplicateKey', label, f"duplicate statement for {statement.field} ('{label}')")
            continue
        values[statement.field] = value
        set_on_line[statement.field] = number

    if queries:
        values['queries'] = tuple(queries)
    if values.get('contacts_undirected') and isinstance(values.get('contacts_source'), RandomContacts):
        diagnostics.append(ParseDiagnostic(
            Severity.WARNING, set_on_line['contacts_undirected'],
            'random contacts are already symmetric; undirected has no effect', 'undirected', 'Redundant'))

    for d in diagnostics:
        if d.severity is Severity.WARNING:
            logger.warning(str(d))
    return ParseResult(ModelFragment(**values), tuple(diagnostics))


def _format_probability(value):
    return repr(float(value))


def format_fragment(fragment):
    """Pretty-print a fragment as model-file text; parsing it back yields the same fragment."""
    assigned = fragment.assigned()
    lines = []
    for key, statement in _STATEMENTS.items():
        if statement.field not in assigned:
            continue
        value = assigned[statement.field]
        label = ' '.join(key)
        if statement.field == 'queries':
            if key == ('query',):
                lines.extend(f"query {q.value}" for q in value)
            continue
        if statement.field == 'population_source':
            if key == ('population', 'file') and isinstance(value, FileSource):
                lines.append(f"{label} {value.path}")
            elif key == ('population', 'random') and isinstance(value, RandomPopulation):
                lines.append(f"{label} {value.n}")
            continue
        if statement.field == 'contacts_source':
            if key == ('contacts', 'file') and isinstance(value, FileSource):
                lines.append(f"{label} {value.path}")
            elif key == ('contacts', 'random') and isinstance(value, RandomContacts):
                lines.append(f"{label} {_format_probability(value.edge_prob)} {value.regime.value}")
            continue
        if statement.field == 'contacts_undirected':
            if value:
                lines.append(label)
            continue
        if statement.field in ('infectious_period', 'immunity_period'):
            text = str(value) if value is not None else ('unbounded' if key[0] == 'infected' else 'permanent')
        elif statement.field == 'initial_infected':
            text = str(value) if isinstance(value, int) else ','.join(value)
        elif isinstance(value, float):
            text = _format_probability(value)
        else:
            text = str(value)
        lines.append(f"{label} {text}")
    return ''.join(line + '\n' for line in lines)


# ============================================================
# MERGING
# ============================================================

def merge_specs(defaults, model):
    """Field-wise union, ``model`` winning; unset fields take the built-in defaults."""
    try:
        return ModelSpec(**{**defaults.assigned(), **model.assigned()})
    except ValidationError as e:
        raise DslError(f"merged model is invalid: {e.errors()[0]['msg']}", code='InvalidMerge') from e


def _checked(text, origin):
    result = parse_model(text)
    if not result.ok:
        first = result.errors[0]
        raise DslError(f"{origin}: {first}", result.diagnostics, code=first.code)
    return result.fragment


def load_spec(model_text, defaults_text=None):
    """Parse, validate and merge model text over optional defaults text."""
    model = _checked(model_text, 'model')
    defaults = _checked(defaults_text, 'defaults') if defaults_text is not None else ModelFragment()
    spec = merge_specs(defaults, model)
    logger.info(
        f"Model '{spec.disease_name}': transmission={spec.transmission_prob} external={spec.external_prob} "
        f"period={spec.infectious_period or 'unbounded'} horizon={spec.horizon} runs={spec.runs}"
    )
    return spec
