"""
python manage.py dataset bars-stripes:3:weighted --out bars3.bmat
python manage.py dataset train-images-idx3-ubyte --binarization threshold --out mnist.bmat
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from boltzmann.services.data import (
    BARS_STRIPES_PREFIX,
    bars_stripes_entropy,
    load_dataset,
    save_bmat,
    save_csv,
    save_idx,
)
from boltzmann.services.exceptions import RbmError


class Command(BaseCommand):
    help = 'Materialise a dataset source (Bars & Stripes or a binarized IDX file) as BMAT, CSV or IDX.'

    def add_arguments(self, parser):
        parser.add_argument('source')
        parser.add_argument('--out', required=True, help='.bmat, .csv or .idx')
        parser.add_argument('--binarization', choices=['stochastic', 'threshold'], default='stochastic')
        parser.add_argument('--threshold', type=float, default=0.5)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--limit', type=int, default=None)

    def handle(self, *args, **options):
        out = Path(options['out'])
        try:
            dataset = load_dataset(options['source'], options['binarization'], options['threshold'],
                                   options['seed'], options['limit'])
            if out.suffix == '.csv':
                save_csv(dataset, out)
            elif out.suffix == '.idx':
                save_idx(dataset.expanded(), out)
            elif out.suffix == '.bmat':
                save_bmat(dataset, out)
            else:
                raise CommandError(f"INVALID_CONFIG: unknown output format {out.suffix!r}")
        except RbmError as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f"IO_ERROR: {e}")

        self.stdout.write(f"{out}: {len(dataset)} patterns, {len(dataset.expanded())} rows of {dataset.m} units")
        if options['source'].startswith(BARS_STRIPES_PREFIX):
            D = int(options['source'].split(':')[1])
            self.stdout.write(f"entropy: {bars_stripes_entropy(D):.6f} nats")
