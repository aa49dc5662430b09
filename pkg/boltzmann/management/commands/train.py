"""
python manage.py train --preset bars3 --algorithm SDCPD --trials 25
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from boltzmann.models import RunStatus
from boltzmann.services.exceptions import RbmError
from boltzmann.tasks import run_experiment

from ._spec_options import add_spec_arguments, build_spec

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Train RBMs over several seeded trials, writing traces, parameters and summary.csv.'

    def add_arguments(self, parser):
        add_spec_arguments(parser)
        parser.add_argument('--jobs', type=int, default=1,
                            help='dispatch trials as Celery tasks when greater than 1')

    def handle(self, *args, **options):
        spec = build_spec(options)
        try:
            run = run_experiment(spec, jobs=options['jobs'])
        except (RbmError, OSError) as e:
            logger.error(f"Training failed: {e}", exc_info=True)
            raise CommandError(str(e))

        failed = run.trials.filter(status=RunStatus.FAILED)
        for trial in failed:
            self.stderr.write(f"trial {trial.trial_index} failed: {trial.error_code}: {trial.error_message}")
        self.stdout.write(str(spec.summary_path()))
        if failed.exists():
            raise CommandError(f"{failed.count()} of {spec.trials} trials failed")
