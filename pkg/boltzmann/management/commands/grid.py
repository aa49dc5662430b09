"""
python manage.py grid --preset bars3 --algorithm SDCPD --trials 4 \
    --grid eta=0.01,0.025,0.05 --grid epsilon=0.01,0.1
"""
from django.core.management.base import BaseCommand, CommandError

from boltzmann.services.exceptions import RbmError
from boltzmann.services.experiments import best_config, grid_search
from boltzmann.services.presets import preset_grid

from ._spec_options import TRAIN_FLAGS, add_spec_arguments, build_spec

FIELD_TYPES = {dest: kind for _, dest, kind, _ in TRAIN_FLAGS}


def parse_grid(entries) -> dict:
    """['eta=0.1,0.2', 'K=1,4'] -> {'eta': [0.1, 0.2], 'K': [1, 4]}"""
    grid = {}
    for entry in entries:
        name, sep, raw = entry.partition('=')
        if not sep or name not in FIELD_TYPES:
            raise CommandError(f"INVALID_CONFIG: bad grid entry {entry!r}, expected FIELD=v1,v2,...")
        try:
            grid[name] = [FIELD_TYPES[name](value) for value in raw.split(',') if value]
        except ValueError as e:
            raise CommandError(f"INVALID_CONFIG: bad value in grid entry {entry!r}: {e}")
    return grid


class Command(BaseCommand):
    help = 'Grid-search TrainConfig fields over seeded trials and rank them by final train ATLL.'

    def add_arguments(self, parser):
        add_spec_arguments(parser)
        parser.add_argument('--grid', action='append', default=[],
                            help="FIELD=v1,v2,... (repeatable); defaults to the preset's search space")

    def handle(self, *args, **options):
        if options['grid']:
            grid = parse_grid(options['grid'])
        elif options.get('preset'):
            try:
                grid = preset_grid(options['preset'], options.get('algorithm') or 'SDCPD')
            except RbmError as e:
                raise CommandError(str(e))
        else:
            raise CommandError("INVALID_CONFIG: give --grid entries or a --preset to search")
        spec = build_spec(options)
        try:
            table = grid_search(spec, grid)
            best = best_config(table, spec.config)
        except RbmError as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f"IO_ERROR: {e}")
        except ValueError as e:
            # Algorithm() on an unknown name in the grid
            raise CommandError(f"INVALID_CONFIG: {e}")

        path = spec.output_dir / 'grid.csv'
        table.to_csv(path, index=False)
        self.stdout.write(table.to_string(index=False))
        chosen = {name: getattr(best, name) for name in grid}
        self.stdout.write('best: ' + ', '.join(f"{name}={getattr(value, 'value', value)}"
                                               for name, value in chosen.items()))
        self.stdout.write(str(path))
