"""
Pipeline shared by the management commands, the shell and the HTTP API:
model files -> ModelSpec -> contact graph -> grounded model -> runs/marginals
-> files.
"""

import json
import logging
import os
from dataclasses import dataclass, field

from django.conf import settings
from pydantic import ValidationError

from . import population
from .dsl import load_spec
from .emission import DataFiles, Mode, emit_program
from .engine import exact_marginals, run_simulations
from .exceptions import DslError, PopulationDataError
from .grounding import ground
from .plotting import PlotStyle, render_plot
from .reporting import Aggregation, aggregate, table_peaks, write_marginals, write_table
from .specs import FileSource, RandomContacts, RandomPopulation

logger = logging.getLogger(__name__)


# ============================================================
# INPUTS
# ============================================================

def read_text(path):
    with open(path, encoding='utf-8-sig') as f:
        try:
            return f.read()
        except UnicodeDecodeError as e:
            raise DslError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})", code='MalformedStatement') from None


def build_spec(model_path=None, defaults_path=None, model_text=None, defaults_text=None, **overrides):
    """
    ModelSpec from model (and defaults) files or texts, then ``overrides``
    (CLI flags, shell ``set``) on top. ``None`` overrides are ignored.
    """
    if model_text is None:
        model_text = read_text(model_path) if model_path else ''
    if defaults_text is None and defaults_path:
        defaults_text = read_text(defaults_path)
    spec = load_spec(model_text, defaults_text)
    changes = {key: value for key, value in overrides.items() if value is not None}
    if not changes:
        return spec
    try:
        return spec.with_overrides(**changes)
    except ValidationError as e:
        raise DslError(f"invalid override: {e.errors()[0]['msg']}", code='InvalidMerge') from e


@dataclass(frozen=True)
class Workload:
    """Graph, which parts of it were generated, and the CSV files it was loaded from."""

    graph: population.TemporalContactGraph
    generated_population: bool = False
    generated_contacts: bool = False
    files: DataFiles = DataFiles()


def _resolve(path, base_dir):
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def _load(loader, source, *args, **kwargs):
    # source is a path or an already open stream
    if hasattr(source, 'read'):
        return loader(source, *args, **kwargs)
    with open(source, 'rb') as f:
        return loader(f, *args, **kwargs)


def _path_of(source):
    # streams have no path a program could csv_load
    return None if hasattr(source, 'read') else source


def build_graph(spec, individuals=None, contacts=None, base_dir=None):
    """
    Population and contacts for ``spec``. ``individuals``/``contacts`` (paths
    or streams) take precedence over the ModelSpec sources; relative paths in the
    spec resolve against ``base_dir``. ``Workload.files`` records the files
    actually read, so an emitted program describes the simulated data.
    """
    source = spec.population_source
    generated_population = False
    individuals_file = None
    if individuals is None and isinstance(source, FileSource):
        individuals = _resolve(source.path, base_dir)
    if individuals is not None:
        ids = _load(population.load_individuals, individuals)
        individuals_file = _path_of(individuals)
    elif isinstance(source, RandomPopulation):
        ids = population.random_individuals(source.n)
        generated_population = True
    else:
        raise PopulationDataError('no population: give an individuals file or a population statement', code='MissingSource')

    source = spec.contacts_source
    generated_contacts = False
    contacts_file = None
    if contacts is None and isinstance(source, FileSource):
        contacts = _resolve(source.path, base_dir)
    if contacts is not None:
        events = _load(population.load_contacts, contacts, ids, spec.contacts_undirected, spec.horizon)
        # reversed rows of an undirected file exist only as facts
        contacts_file = None if spec.contacts_undirected else _path_of(contacts)
    elif isinstance(source, RandomContacts):
        events = population.generate_contacts(ids, source.edge_prob, source.regime, spec.horizon, spec.seed)
        generated_contacts = True
    else:
        events = frozenset()

    graph = population.TemporalContactGraph(ids, events)
    logger.info(f"Graph: {len(ids)} individuals, {len(events)} contact events")
    return Workload(graph, generated_population, generated_contacts, DataFiles(individuals_file, contacts_file))


# ============================================================
# OUTPUTS
# ============================================================

def compile_program(spec, workload, grounded=False, out=None):
    graph = workload.graph
    model = ground(spec, graph)
    mode = Mode.GROUNDED if grounded else Mode.RELATIONAL
    text = emit_program(spec, graph, mode, model=model, files=workload.files)
    if out:
        _write(out, text)
    return text, model


def _write(path, text):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def _write_csv(path, writer, *args):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer(*args, f)
    logger.info(f"Wrote {path}")


@dataclass
class BatchResult:
    trajectories: list
    mean: object
    stacked: object
    peaks: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def run_batch(spec, workload, out_dir, workers=None, progress=False, plot=None,
              plot_series=('infected',), emit=False):
    """
    Run ``spec.runs`` simulations and write ``run_<k>.csv`` per run,
    ``aggregate.csv`` (mean), plus ``plot.svg`` when ``plot`` names a style,
    ``model.pl`` when ``emit`` is set and the generated population/contacts.
    """
    workers = workers or settings.SIMULATION_WORKERS
    graph = workload.graph
    model = ground(spec, graph)
    trajectories = run_simulations(model, spec.runs, spec.seed, workers=workers, progress=progress)
    os.makedirs(out_dir, exist_ok=True)
    result = BatchResult(trajectories, aggregate(trajectories, Aggregation.MEAN), aggregate(trajectories, Aggregation.STACKED))

    for trajectory in trajectories:
        path = os.path.join(out_dir, f"run_{trajectory.run_index}.csv")
        _write_csv(path, write_table, aggregate([trajectory], Aggregation.SINGLE))
        result.files.append(path)
    path = os.path.join(out_dir, 'aggregate.csv')
    _write_csv(path, write_table, result.mean)
    result.files.append(path)
    result.peaks = table_peaks(result.mean)

    if plot:
        path = os.path.join(out_dir, 'plot.svg')
        render_plot(result.stacked, PlotStyle(plot), plot_series, out=path)
        result.files.append(path)
    if emit:
        path = os.path.join(out_dir, 'model.pl')
        _write(path, emit_program(spec, graph, Mode.RELATIONAL, model=model, files=workload.files))
        result.files.append(path)
    if workload.generated_population:
        path = os.path.join(out_dir, 'individuals.csv')
        _write_csv(path, population.write_individuals, graph.individuals)
        result.files.append(path)
    if workload.generated_contacts:
        path = os.path.join(out_dir, 'contacts.csv')
        _write_csv(path, population.write_contacts, graph.events)
        result.files.append(path)
    return result


def run_exact(spec, graph, out_dir=None, max_coins=None, chunk_bits=None, workers=None):
    """Exact marginals; writes ``marginals.csv`` into ``out_dir`` when given."""
    model = ground(spec, graph)
    marginals = exact_marginals(
        model,
        max_coins=max_coins or settings.EXACT_MAX_COINS,
        chunk_bits=chunk_bits or settings.EXACT_CHUNK_BITS,
        workers=workers or settings.SIMULATION_WORKERS,
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, 'marginals.csv'), write_marginals, marginals)
    return marginals


# ============================================================
# STREAMING
# ============================================================

def _rows(table):
    return [[t, *counts] for _, t, *counts in table.rows()]


def stream_simulation(spec, workload):
    """NDJSON events: ``log``, one ``run`` per trajectory, then ``finish`` (or ``error``)."""
    def emit(kind, data):
        return json.dumps({'type': kind, 'data': data}) + "\n"

    graph = workload.graph
    yield emit('log', f"Model '{spec.disease_name}': {len(graph.individuals)} individuals, "
                      f"{len(graph.events)} contact events, {spec.runs} runs, horizon {spec.horizon}")
    try:
        model = ground(spec, graph)
        yield emit('log', f"Grounded {len(model.coins)} coins")
        trajectories = run_simulations(model, spec.runs, spec.seed, workers=settings.SIMULATION_WORKERS)
        for trajectory in trajectories:
            yield emit('run', {'index': trajectory.run_index, 'rows': _rows(aggregate([trajectory]))})
        mean = aggregate(trajectories, Aggregation.MEAN)
        yield emit('finish', {
            'mean': [[t, *[round(v, 6) for v in counts]] for t, *counts in _rows(mean)],
            'peaks': table_peaks(mean)['mean'],
        })
    except Exception as e:
        logger.error(f"Streamed simulation failed: {e}")
        yield emit('error', str(e))
