import io
import json
import logging

from django.http import JsonResponse, StreamingHttpResponse
from django.views.decorators.csrf import csrf_exempt

from .exceptions import EpilogError, PopulationDataError
from .services import build_graph, build_spec, compile_program, stream_simulation
from .specs import FileSource

logger = logging.getLogger(__name__)


# ============================================================
# HELPERS
# ============================================================

def _payload(request):
    """JSON body as a dict, or raise ValueError."""
    try:
        body = json.loads(request.body.decode('utf-8') or '{}')
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"invalid JSON body: {e}") from None
    if not isinstance(body, dict):
        raise ValueError('JSON body must be an object')
    if not isinstance(body.get('model', ''), str):
        raise ValueError("'model' must be model text")
    return body


def _inline(body, key):
    text = body.get(key)
    if text is None:
        return None
    if not isinstance(text, str):
        raise ValueError(f"'{key}' must be CSV text")
    return io.StringIO(text, newline='')


def _workload(body, **overrides):
    """Spec and graph from inline texts; server-side paths are never read."""
    spec = build_spec(model_text=body.get('model', ''), defaults_text=body.get('defaults'), **overrides)
    individuals, contacts = _inline(body, 'individuals'), _inline(body, 'contacts')
    if isinstance(spec.population_source, FileSource) and individuals is None:
        raise PopulationDataError("population file sources need inline 'individuals' CSV", code='MissingSource')
    if isinstance(spec.contacts_source, FileSource) and contacts is None:
        raise PopulationDataError("contacts file sources need inline 'contacts' CSV", code='MissingSource')
    return spec, build_graph(spec, individuals, contacts)


# ============================================================
# API: COMPILE
# ============================================================

@csrf_exempt
def api_compile(request):
    """
    POST /api/compile/

    Body: {"model": "...", "defaults"?, "individuals"?, "contacts"?, "grounded"?: bool}
    Response: {"program": "...", "coins": {"external": n, ...}}
    """
    if request.method != 'POST':
        return JsonResponse({'error': 'method not allowed'}, status=405)
    try:
        body = _payload(request)
        spec, workload = _workload(body)
        program, model = compile_program(spec, workload, grounded=bool(body.get('grounded')))
    except (EpilogError, ValueError) as e:
        return JsonResponse({'error': str(e), 'code': getattr(e, 'code', 'BadRequest')}, status=400)
    return JsonResponse({
        'program': program,
        'coins': {kind.name.lower(): n for kind, n in model.coin_counts().items()},
    })


# ============================================================
# API: SIMULATE (STREAM)
# ============================================================

@csrf_exempt
def api_simulate(request):
    """
    POST /api/simulate/

    Same body as compile plus optional "runs" and "seed". Streams NDJSON
    events ``log``, ``run``, ``finish`` or ``error``.
    """
    if request.method != 'POST':
        return JsonResponse({'error': 'method not allowed'}, status=405)
    try:
        body = _payload(request)
        spec, workload = _workload(body, runs=body.get('runs'), seed=body.get('seed'))
    except (EpilogError, ValueError) as e:
        return JsonResponse({'error': str(e), 'code': getattr(e, 'code', 'BadRequest')}, status=400)

    logger.info(f"Streaming {spec.runs} run(s) of '{spec.disease_name}'")
    response = StreamingHttpResponse(stream_simulation(spec, workload), content_type='application/x-ndjson')
    response['Cache-Control'] = 'no-cache'
    response['X-Accel-Buffering'] = 'no'
    return response
