"""
python manage.py generate params.rbmp --count 25 --out samples.pgm
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from boltzmann.services.data import BinaryDataset, save_bmat
from boltzmann.services.exceptions import RbmError
from boltzmann.services.params_io import load_params
from boltzmann.services.sampling import RngStream, generate_samples, write_pgm_grid


def _shape(value: str):
    rows, _, cols = value.lower().partition('x')
    return int(rows), int(cols)


class Command(BaseCommand):
    help = 'Draw model samples by block Gibbs sampling and write them as a PGM grid or BMAT file.'

    def add_arguments(self, parser):
        parser.add_argument('params_path')
        parser.add_argument('--count', type=int, default=25)
        parser.add_argument('--steps', type=int, default=None,
                            help='Gibbs steps per chain (200 below 100 visible units, else 5000)')
        parser.add_argument('--out', default='samples.pgm', help='.pgm for an image grid, .bmat for raw bits')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--tile-shape', type=_shape, default=None, help='HxW of one sample')
        parser.add_argument('--grid', type=_shape, default=None, help='ROWSxCOLS of the sample grid')

    def handle(self, *args, **options):
        out = Path(options['out'])
        try:
            params = load_params(options['params_path'])
            samples = generate_samples(params, options['count'], options['steps'], RngStream(options['seed']))
            if out.suffix == '.bmat':
                save_bmat(BinaryDataset(samples, name=out.stem), out)
            else:
                write_pgm_grid(samples, out, options['tile_shape'], options['grid'])
        except RbmError as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f"IO_ERROR: {e}")
        self.stdout.write(str(out))
