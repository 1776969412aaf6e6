from django.conf import settings

from epidemic import services
from epidemic.management.base import ModelCommand
from epidemic.reporting import format_marginals


class Command(ModelCommand):
    help = 'Compute exact marginals by enumerating every coin assignment (small models only)'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--out', default=settings.OUTPUT_DIR, help='directory for marginals.csv')
        parser.add_argument('--max-coins', type=int, default=settings.EXACT_MAX_COINS)
        parser.add_argument('--workers', type=int, default=settings.SIMULATION_WORKERS)

    def handle(self, *args, **options):
        spec, workload = self.load(options)
        marginals = services.run_exact(
            spec, workload.graph, out_dir=options['out'],
            max_coins=options['max_coins'], workers=options['workers'])
        self.stdout.write(format_marginals(marginals), ending='')
