from django.conf import settings

from epidemic import services
from epidemic.management.base import ModelCommand


class Command(ModelCommand):
    help = 'Simulate a model and write run_<k>.csv, aggregate.csv and optional plot.svg/model.pl'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--runs', type=int, help='number of Monte Carlo runs')
        parser.add_argument('--out', default=settings.OUTPUT_DIR, help='output directory')
        parser.add_argument('--workers', type=int, default=settings.SIMULATION_WORKERS)
        parser.add_argument('--plot', choices=['line', 'scatter'], help='also write plot.svg in this style')
        parser.add_argument('--series', default='infected', help='comma-separated compartments to plot')
        parser.add_argument('--emit', action='store_true', help='also write model.pl')
        parser.add_argument('--peaks', action='store_true', help='report peaks of the mean infected series')
        parser.add_argument('--progress', action='store_true', help='show a progress bar on stderr')

    def overrides(self, options):
        return {**super().overrides(options), 'runs': options.get('runs')}

    def handle(self, *args, **options):
        spec, workload = self.load(options)
        batch = services.run_batch(
            spec, workload, options['out'],
            workers=options['workers'],
            progress=options['progress'],
            plot=options['plot'],
            plot_series=[s for s in options['series'].split(',') if s],
            emit=options['emit'],
        )
        for path in batch.files:
            self.stdout.write(f"wrote {path}")
        if options['peaks']:
            found = batch.peaks['mean']
            self.stdout.write(f"peaks: {', '.join(map(str, found)) or 'none'}")
        self.stdout.write(self.style.SUCCESS(f"{len(batch.trajectories)} run(s) of '{spec.disease_name}' completed"))
