import logging
import os

from django.core.management.base import BaseCommand, CommandError

from epidemic import services
from epidemic.exceptions import EpilogError

logger = logging.getLogger(__name__)

EXIT_INVALID = 1
EXIT_IO = 2


class ModelCommand(BaseCommand):
    """Shared model/data options and error-to-exit-code translation."""

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='model file')
        parser.add_argument('--defaults', help='defaults file (same statements as the model)')
        parser.add_argument('--individuals', help='individuals CSV, overriding the model source')
        parser.add_argument('--contacts', help='contacts CSV (target,source,timestep), overriding the model source')
        parser.add_argument('--horizon', type=int, help='number of timesteps')
        parser.add_argument('--seed', type=int, help='master seed')

    def overrides(self, options):
        return {'horizon': options.get('horizon'), 'seed': options.get('seed')}

    def load(self, options):
        spec = services.build_spec(options['model'], options.get('defaults'), **self.overrides(options))
        workload = services.build_graph(
            spec, options.get('individuals'), options.get('contacts'), os.path.dirname(options['model']))
        return spec, workload

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except OSError as e:
            raise CommandError(f"I/O failure: {e}", returncode=EXIT_IO) from e
        except EpilogError as e:
            returncode = EXIT_IO if e.code == 'IoFailure' else EXIT_INVALID
            raise CommandError(f"{e.code}: {e}", returncode=returncode) from e
