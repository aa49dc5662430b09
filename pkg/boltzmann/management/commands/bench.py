"""
python manage.py bench --preset bars3 --epochs 100 --repeats 10
"""
from django.core.management.base import BaseCommand, CommandError

from boltzmann.services.exceptions import RbmError
from boltzmann.services.experiments import BENCH_ALGORITHMS, time_algorithms, timing_ratios

from ._spec_options import add_spec_arguments, build_spec


class Command(BaseCommand):
    help = 'Time fixed-epoch training per algorithm and report S-DCP/CD and S-DCP-D/S-DCP ratios.'

    def add_arguments(self, parser):
        add_spec_arguments(parser)
        parser.add_argument('--algorithms', nargs='+', default=list(BENCH_ALGORITHMS))
        parser.add_argument('--repeats', type=int, default=10)

    def handle(self, *args, **options):
        if options['repeats'] < 1:
            raise CommandError("INVALID_CONFIG: --repeats must be at least 1")
        spec = build_spec(options)
        try:
            table = time_algorithms(spec, options['algorithms'], options['repeats'])
        except RbmError as e:
            raise CommandError(str(e))
        except ValueError as e:
            # Algorithm() on an unknown name
            raise CommandError(f"INVALID_CONFIG: {e}")

        path = spec.output_dir / 'bench.csv'
        table.to_csv(path, index=False)
        self.stdout.write(table.to_string(index=False))
        for label, ratio in timing_ratios(table).items():
            self.stdout.write(f"{label}: {ratio:.3f}")
        self.stdout.write(str(path))
