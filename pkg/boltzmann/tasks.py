"""
Celery tasks and orchestration for multi-trial training runs.
"""
import logging
import math
from dataclasses import replace
from typing import List

from celery import group, shared_task

from .models import ExperimentRun, RunStatus, TrialRun
from .services.exceptions import NON_RETRYABLE_CODES, RbmError
from .services.experiments import ExperimentSpec, write_summary
from .services.params_io import save_params
from .services.training import TrainTrace, train

logger = logging.getLogger(__name__)


def _finite_or_none(value: float):
    return None if value is None or math.isnan(value) else value


def execute_trial(trial_id: str, spec_data: dict) -> dict:
    """
    Train one seeded trial, write its trace and parameters, and record the
    outcome on its TrialRun row.
    """
    trial = TrialRun.objects.get(id=trial_id)
    trial.status = RunStatus.PROCESSING
    trial.save(update_fields=['status', 'updated_at'])

    try:
        spec = ExperimentSpec.from_dict(spec_data)
        logger.info(f"Starting trial {trial.trial_index} (seed {trial.seed}) of {spec.config.algorithm.value}")

        train_data, test_data = spec.load_datasets()
        config = replace(spec.config, seed=trial.seed)
        trace = train(train_data, config, spec.hidden, spec.evaluator(train_data, test_data, trial.seed))

        trace.to_csv(spec.trace_path(trial.trial_index))
        save_params(trace.params, spec.params_path(trial.trial_index))

        final = trace.final()
        trial.status = RunStatus.COMPLETED
        trial.final_train_ll = _finite_or_none(final.train_ll) if final else None
        trial.final_test_ll = _finite_or_none(final.test_ll) if final else None
        trial.wall_seconds = trace.train_seconds()
        trial.save()

        logger.info(f"Trial {trial.trial_index} finished in {trial.wall_seconds:.2f}s")
        return {'status': RunStatus.COMPLETED, 'trial_index': trial.trial_index}

    except Exception as e:
        # RbmError renders as "CODE: message"; anything else is unexpected
        error_code = e.code if isinstance(e, RbmError) else 'PROCESSING_ERROR'
        error_message = e.message if isinstance(e, RbmError) else str(e)
        if isinstance(e, OSError):
            error_code = 'IO_ERROR'
        logger.error(f"Trial {trial.trial_index} failed: {error_code}: {error_message}", exc_info=True)
        trial.mark_failed(error_code, error_message)
        raise


@shared_task(bind=True, max_retries=2, default_retry_delay=5)
def run_trial_task(self, trial_id: str, spec_data: dict):
    """Worker entry point for one trial; only I/O failures are retried."""
    try:
        return execute_trial(trial_id, spec_data)
    except RbmError as e:
        if e.code in NON_RETRYABLE_CODES:
            return {'status': RunStatus.FAILED, 'error_code': e.code, 'error_message': e.message}
        raise self.retry(exc=e)
    except OSError as e:
        raise self.retry(exc=e)


def create_run(spec: ExperimentSpec) -> ExperimentRun:
    run = ExperimentRun.objects.create(
        name=spec.name,
        algorithm=spec.config.algorithm.value,
        dataset=spec.dataset,
        hidden_units=spec.hidden,
        config=spec.to_dict(),
        output_dir=str(spec.output_dir),
    )
    for index, seed in enumerate(spec.seeds):
        TrialRun.objects.create(run=run, trial_index=index, seed=seed)
    return run


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentRun:
    """
    Run every trial of `spec`, then write summary.csv from the traces of the
    completed trials. jobs > 1 dispatches the trials as a Celery group.

    Args:
        spec: Validated experiment spec; one TrialRun row is created per seed
        jobs: 1 runs in-process, anything larger dispatches a Celery group

    Returns:
        ExperimentRun with its status refreshed from the trial rows
    """
    run = create_run(spec)
    spec_data = spec.to_dict()
    trials: List[TrialRun] = list(run.trials.all())
    logger.info(f"Experiment {run.id}: {len(trials)} trials of {run.algorithm} into {spec.output_dir}")

    if jobs <= 1:
        for trial in trials:
            try:
                execute_trial(str(trial.id), spec_data)
            except Exception:
                # Already recorded on the trial row; keep going with the rest
                pass
    else:
        signatures = [run_trial_task.s(str(trial.id), spec_data) for trial in trials]
        result = group(signatures).apply_async()
        for trial, async_result in zip(trials, result.results):
            trial.task_id = async_result.id or ''
            trial.save(update_fields=['task_id', 'updated_at'])
        result.get(propagate=False)

    completed = run.trials.filter(status=RunStatus.COMPLETED).order_by('trial_index')
    traces = [TrainTrace.from_csv(spec.trace_path(t.trial_index)) for t in completed]
    write_summary(traces, spec.summary_path())
    run.refresh_status()
    return run
