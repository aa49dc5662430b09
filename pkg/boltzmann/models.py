"""
Database models tracking experiment runs and their trials.
"""
import uuid
from django.db import models


class RunStatus(models.TextChoices):
    PENDING = 'pending', 'Pending'
    PROCESSING = 'processing', 'Processing'
    COMPLETED = 'completed', 'Completed'
    FAILED = 'failed', 'Failed'


class ExperimentRun(models.Model):
    """
    One `train` invocation: a configuration repeated over several seeds.
    Result files live in output_dir; this row only tracks progress.
    """
    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)

    name = models.CharField(max_length=255, blank=True, default='')
    algorithm = models.CharField(max_length=10)
    dataset = models.TextField()
    hidden_units = models.PositiveIntegerField()
    config = models.JSONField(default=dict)
    output_dir = models.TextField()

    status = models.CharField(max_length=20, choices=RunStatus.choices, default=RunStatus.PENDING)

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.name or self.algorithm} on {self.dataset} ({self.status})"

    def refresh_status(self):
        """Derive the run status from its trials and save."""
        statuses = set(self.trials.values_list('status', flat=True))
        if RunStatus.FAILED in statuses:
            self.status = RunStatus.FAILED
        elif statuses == {RunStatus.COMPLETED}:
            self.status = RunStatus.COMPLETED
        elif statuses & {RunStatus.PROCESSING, RunStatus.COMPLETED}:
            self.status = RunStatus.PROCESSING
        self.save(update_fields=['status', 'updated_at'])
        return self.status


class TrialRun(models.Model):
    """
    One seeded trial of an experiment run.
    """
    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='trials')
    trial_index = models.PositiveIntegerField()
    seed = models.BigIntegerField()
    task_id = models.CharField(max_length=255, blank=True, default='')

    status = models.CharField(max_length=20, choices=RunStatus.choices, default=RunStatus.PENDING)

    # Final evaluated metrics
    final_train_ll = models.FloatField(null=True, blank=True)
    final_test_ll = models.FloatField(null=True, blank=True)
    wall_seconds = models.FloatField(null=True, blank=True)

    # Error tracking
    error_code = models.CharField(max_length=50, blank=True, default='')
    error_message = models.TextField(blank=True, default='')

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = 'Trial Run'
        verbose_name_plural = 'Trial Runs'
        ordering = ['run', 'trial_index']
        constraints = [
            models.UniqueConstraint(fields=['run', 'trial_index'], name='unique_trial_per_run'),
        ]

    def __str__(self):
        return f"Trial {self.trial_index} (seed {self.seed}): {self.status}"

    def mark_failed(self, error_code: str, error_message: str):
        self.status = RunStatus.FAILED
        self.error_code = error_code
        self.error_message = error_message
        self.save(update_fields=['status', 'error_code', 'error_message', 'updated_at'])
