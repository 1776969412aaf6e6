from epidemic import services
from epidemic.management.base import ModelCommand


class Command(ModelCommand):
    help = 'Write the probabilistic logic program generated for a model'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--emit', required=True, help='output program path')
        parser.add_argument('--grounded', action='store_true', help='unroll individuals and timesteps')

    def handle(self, *args, **options):
        spec, workload = self.load(options)
        _, model = services.compile_program(spec, workload, grounded=options['grounded'], out=options['emit'])
        counts = ', '.join(f"{kind.name.lower()}={n}" for kind, n in model.coin_counts().items())
        self.stdout.write(self.style.SUCCESS(f"wrote {options['emit']} ({counts})"))
