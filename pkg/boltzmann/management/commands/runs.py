"""
python manage.py runs              # latest experiment runs
python manage.py runs <run-id>     # one run with its trials
"""
import json

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from boltzmann.models import ExperimentRun
from boltzmann.serializers import ExperimentRunSerializer


class Command(BaseCommand):
    help = 'Show the status of experiment runs and their trials as JSON.'

    def add_arguments(self, parser):
        parser.add_argument('run_id', nargs='?')
        parser.add_argument('--limit', type=int, default=10)

    def handle(self, *args, **options):
        if options['run_id']:
            try:
                run = ExperimentRun.objects.get(id=options['run_id'])
            except (ExperimentRun.DoesNotExist, ValidationError):
                raise CommandError(f"RUN_NOT_FOUND: no experiment run {options['run_id']}")
            data = ExperimentRunSerializer(run).data
        else:
            runs = ExperimentRun.objects.prefetch_related('trials')[:options['limit']]
            data = ExperimentRunSerializer(runs, many=True).data
        self.stdout.write(json.dumps(data, default=str, indent=2))
