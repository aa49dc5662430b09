"""
python manage.py eval params.rbmp data.bmat --method exact
"""
import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from boltzmann.services.data import load_dataset
from boltzmann.services.evaluation import AisConfig, ais_log_partition, estimate_atll
from boltzmann.services.exceptions import IntractableSizeError, RbmError
from boltzmann.services.model import exact_log_partition
from boltzmann.services.params_io import load_params
from boltzmann.services.sampling import RngStream

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Average log-likelihood of a dataset under saved parameters, exact or by AIS.'

    def add_arguments(self, parser):
        parser.add_argument('params_path')
        parser.add_argument('dataset')
        parser.add_argument('--method', choices=['exact', 'ais'], default='exact')
        parser.add_argument('--particles', type=int, default=settings.RBM_AIS_PARTICLES)
        parser.add_argument('--intermediate', type=int, default=settings.RBM_AIS_INTERMEDIATE)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--cap', type=int, default=settings.RBM_ENUMERATION_CAP,
                            help='largest layer enumerated exactly')
        parser.add_argument('--binarization', choices=['stochastic', 'threshold'], default='stochastic')
        parser.add_argument('--threshold', type=float, default=0.5)
        parser.add_argument('--ais-dump', help='write per-particle AIS log-weights to this JSON file')

    def handle(self, *args, **options):
        try:
            params = load_params(options['params_path'])
            data = load_dataset(options['dataset'], options['binarization'], options['threshold'], options['seed'])
            if data.m != params.m:
                raise CommandError(
                    f"SHAPE_MISMATCH: dataset has {data.m} visible units, parameters have {params.m}"
                )

            report = {'method': options['method'], 'rows': len(data)}
            if options['method'] == 'exact':
                log_z = exact_log_partition(params, cap=options['cap'])
            else:
                cfg = AisConfig(options['particles'], options['intermediate'])
                result = ais_log_partition(params, cfg, RngStream(options['seed']))
                log_z = result.log_z_estimate
                report['ess'] = result.ess
                if options['ais_dump']:
                    result.dump(options['ais_dump'])
        except IntractableSizeError as e:
            raise CommandError(f"{e}; use --method ais")
        except RbmError as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f"IO_ERROR: {e}")

        report['log_z'] = log_z
        report['atll'] = estimate_atll(params, data, log_z)
        logger.info(f"ATLL of {options['dataset']}: {report['atll']:.6f}")
        self.stdout.write(json.dumps(report))
