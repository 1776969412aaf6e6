"""
Interactive shell session.

``Session.execute`` takes one command line and returns the text to print.
Every mutation is computed on a copy and committed only once the resulting
ModelSpec validates, so a failing command leaves the session as it was.
"""

import logging
import os
import shlex
from dataclasses import dataclass, field, replace

from django.conf import settings

from core.decorators import reports_errors

from . import services
from .dsl import parse_model, statement_usage
from .exceptions import DslError, EpilogError
from .plotting import PlotStyle, render_plot
from .reporting import Aggregation, aggregate, format_marginals, format_table, table_peaks
from .specs import Compartment, ModelSpec

logger = logging.getLogger(__name__)

COMMANDS = {
    'help': ('help', 'list commands and model statements'),
    'load': ('load model|defaults <path>', 'read a model or defaults file'),
    'set': ('set <key> <value> | set <statement>', 'change a setting or apply one model statement'),
    'show': ('show', 'print the current settings'),
    'compile': ('compile [--emit <path>] [--grounded]', 'print or write the generated program'),
    'run': ('run', 'simulate the configured runs and write the output files'),
    'exact': ('exact', 'compute exact marginals and write marginals.csv'),
    'table': ('table [--mean] [--peaks]', 'tabulate the last runs, individually or averaged'),
    'plot': ('plot [--scatter] [--series c1,c2] <path>', 'draw the last runs as an SVG chart'),
    'quit': ('quit', 'leave the shell'),
}

SETTINGS_KEYS = ('runs', 'seed', 'horizon', 'queries', 'out', 'individuals', 'contacts', 'workers')


class ShellError(EpilogError):
    code = 'BadCommand'


@dataclass(frozen=True)
class SessionConfig:
    model_path: str | None = None
    defaults_path: str | None = None
    individuals: str | None = None
    contacts: str | None = None
    out_dir: str = 'output'
    workers: int = 1
    overrides: dict = field(default_factory=dict)


def _flags(args, switches=(), valued=()):
    """Split ``args`` into (flags, positionals); ``valued`` flags take the next word."""
    flags, positional = {}, []
    words = iter(args)
    for word in words:
        if word in switches:
            flags[word] = True
        elif word in valued:
            value = next(words, None)
            if value is None:
                raise ShellError(f"{word} needs a value")
            flags[word] = value
        elif word.startswith('--'):
            raise ShellError(f"unknown option {word}")
        else:
            positional.append(word)
    return flags, positional


def _integer(key, value, minimum):
    try:
        number = int(value)
    except ValueError:
        raise ShellError(f"{key} must be an integer, got {value!r}") from None
    if number < minimum:
        raise ShellError(f"{key} must be >= {minimum}, got {number}")
    return number


class Session:
    def __init__(self, config=None):
        self.config = config or SessionConfig(
            out_dir=settings.OUTPUT_DIR, workers=settings.SIMULATION_WORKERS)
        self.spec = self._spec_for(self.config)
        self.last_batch = None
        self.finished = False

    # -------- state --------

    def _spec_for(self, config):
        return services.build_spec(config.model_path, config.defaults_path, **config.overrides)

    def _commit(self, config):
        spec = self._spec_for(config)
        self.config, self.spec = config, spec

    def _base_dir(self):
        return os.path.dirname(self.config.model_path) if self.config.model_path else None

    def _workload(self):
        return services.build_graph(self.spec, self.config.individuals, self.config.contacts, self._base_dir())

    # -------- dispatch --------

    def execute(self, line):
        try:
            words = shlex.split(line, comments=True)
        except ValueError as e:
            return f"error: {e}"
        if not words:
            return ''
        name, args = words[0].lower(), words[1:]
        handler = getattr(self, f"do_{name}", None)
        if name not in COMMANDS or handler is None:
            return f"unknown command {words[0]!r}; type 'help'"
        return handler(args)

    @reports_errors(EpilogError, OSError)
    def do_help(self, args):
        width = max(len(usage) for usage, _ in COMMANDS.values())
        lines = [f"  {usage.ljust(width)}  {doc}" for usage, doc in COMMANDS.values()]
        lines += ['', f"set keys: {', '.join(SETTINGS_KEYS)}", 'model statements:']
        lines += [f"  {usage}" for usage in statement_usage()]
        return '\n'.join(lines)

    @reports_errors(EpilogError, OSError)
    def do_load(self, args):
        if len(args) != 2 or args[0].lower() not in ('model', 'defaults'):
            raise ShellError('usage: load model|defaults <path>')
        kind, path = args[0].lower(), args[1]
        if not os.path.isfile(path):
            raise ShellError(f"no such file: {path}", code='IoFailure')
        field_name = 'model_path' if kind == 'model' else 'defaults_path'
        self._commit(replace(self.config, **{field_name: path}))
        return f"loaded {kind} {path}"

    @reports_errors(EpilogError, OSError)
    def do_set(self, args):
        if len(args) < 2:
            raise ShellError('usage: set <key> <value> | set <statement>')
        key, value = args[0].lower(), ' '.join(args[1:])
        config = self.config
        overrides = dict(config.overrides)
        if key in ('runs', 'horizon'):
            overrides[key] = _integer(key, value, 1)
        elif key == 'seed':
            overrides['seed'] = _integer(key, value, 0)
        elif key == 'queries':
            try:
                overrides['queries'] = tuple(Compartment(q.strip().lower()) for q in value.split(','))
            except ValueError:
                raise ShellError(f"queries must name compartments, got {value!r}") from None
        elif key == 'out':
            config = replace(config, out_dir=value)
        elif key in ('individuals', 'contacts'):
            if not os.path.isfile(value):
                raise ShellError(f"no such file: {value}", code='IoFailure')
            config = replace(config, **{key: value})
        elif key == 'workers':
            config = replace(config, workers=_integer(key, value, 1))
        else:
            result = parse_model(' '.join(args))
            if not result.ok:
                first = result.errors[0]
                raise DslError(first.message, result.diagnostics, code=first.code)
            overrides.update(result.fragment.assigned())
        self._commit(replace(config, overrides=overrides))
        return f"set {' '.join(args)}"

    @reports_errors(EpilogError, OSError)
    def do_show(self, args):
        values = self.spec.model_dump(mode='json')
        lines = [f"{name}={values[name]}" for name in ModelSpec.model_fields]
        lines += [
            f"model={self.config.model_path or '-'}",
            f"defaults={self.config.defaults_path or '-'}",
            f"individuals={self.config.individuals or '-'}",
            f"contacts={self.config.contacts or '-'}",
            f"out={self.config.out_dir}",
            f"workers={self.config.workers}",
        ]
        return '\n'.join(lines)

    @reports_errors(EpilogError, OSError)
    def do_compile(self, args):
        flags, positional = _flags(args, switches=('--grounded',), valued=('--emit',))
        if positional:
            raise ShellError(f"unexpected argument {positional[0]!r}")
        workload = self._workload()
        text, model = services.compile_program(
            self.spec, workload, grounded=flags.get('--grounded', False), out=flags.get('--emit'))
        if '--emit' in flags:
            return f"wrote {flags['--emit']} ({len(model.coins)} coins)"
        return text.rstrip('\n')

    @reports_errors(EpilogError, OSError)
    def do_run(self, args):
        if args:
            raise ShellError('run takes no arguments; use set')
        batch = services.run_batch(self.spec, self._workload(), self.config.out_dir, workers=self.config.workers)
        self.last_batch = batch
        return f"{len(batch.trajectories)} run(s) written to {self.config.out_dir}"

    @reports_errors(EpilogError, OSError)
    def do_exact(self, args):
        if args:
            raise ShellError('exact takes no arguments')
        marginals = services.run_exact(
            self.spec, self._workload().graph, out_dir=self.config.out_dir, workers=self.config.workers)
        return format_marginals(marginals).rstrip('\n')

    def _require_batch(self):
        if self.last_batch is None:
            raise ShellError("no runs yet; use 'run' first", code='EmptyInput')
        return self.last_batch

    @reports_errors(EpilogError, OSError)
    def do_table(self, args):
        flags, positional = _flags(args, switches=('--mean', '--peaks'))
        if positional:
            raise ShellError(f"unexpected argument {positional[0]!r}")
        batch = self._require_batch()
        mode = Aggregation.MEAN if flags.get('--mean') else Aggregation.STACKED
        table = aggregate(batch.trajectories, mode)
        text = format_table(table).rstrip('\n')
        if flags.get('--peaks'):
            peaks = table_peaks(table)
            text += '\n' + '\n'.join(
                f"peaks {label}: {', '.join(map(str, found)) or 'none'}" for label, found in peaks.items())
        return text

    @reports_errors(EpilogError, OSError, ValueError)
    def do_plot(self, args):
        flags, positional = _flags(args, switches=('--scatter',), valued=('--series',))
        if len(positional) != 1:
            raise ShellError('usage: plot [--scatter] [--series c1,c2] <path>')
        batch = self._require_batch()
        series = [s for s in flags.get('--series', 'infected').split(',') if s]
        style = PlotStyle.SCATTER if flags.get('--scatter') else PlotStyle.LINE
        render_plot(batch.stacked, style, series, out=positional[0])
        return f"wrote {positional[0]}"

    @reports_errors(EpilogError, OSError)
    def do_quit(self, args):
        self.finished = True
        return 'bye'
