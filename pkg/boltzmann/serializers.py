"""
DRF serializers validating experiment settings from presets, config files
and command-line flags, and rendering run status.
"""
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from .models import ExperimentRun, TrialRun
from .services.evaluation import AisConfig
from .services.exceptions import ConfigError
from .services.experiments import EVAL_METHODS, ExperimentSpec
from .services.training import Algorithm, TrainConfig

TRAIN_CONFIG_FIELDS = TrainConfig.field_names()


class TrainConfigSerializer(serializers.Serializer):
    """Validates TrainConfig fields; save() returns a TrainConfig."""
    algorithm = serializers.ChoiceField(choices=[a.value for a in Algorithm], default=Algorithm.CD.value)
    eta = serializers.FloatField(default=0.05)
    K = serializers.IntegerField(min_value=1, default=1)
    d = serializers.IntegerField(min_value=1, default=1)
    K_prime = serializers.IntegerField(min_value=1, default=1)
    epsilon = serializers.FloatField(default=0.01)
    lambda_H = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.9)
    nu_mu = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.01)
    nu_lambda = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.01)
    batch_size = serializers.IntegerField(min_value=0, default=200)
    epochs = serializers.IntegerField(min_value=0, default=1)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 63 - 1, default=0)
    shuffle = serializers.BooleanField(default=True)
    eval_every = serializers.IntegerField(min_value=1, default=1)
    p_min = serializers.FloatField(default=1e-4)
    init_std = serializers.FloatField(min_value=0.0, default=0.01)
    cost_parity = serializers.BooleanField(default=False)

    def validate_eta(self, value):
        if value <= 0:
            raise serializers.ValidationError("Learning rate must be positive.")
        return value

    def validate_epsilon(self, value):
        if value <= 0:
            raise serializers.ValidationError("Epsilon must be positive.")
        return value

    def build_config(self, attrs) -> TrainConfig:
        config = TrainConfig(**{name: attrs[name] for name in TRAIN_CONFIG_FIELDS if name in attrs})
        try:
            return config.validate()
        except ConfigError as e:
            raise serializers.ValidationError(e.message)

    def validate(self, attrs):
        self.build_config(attrs)
        return attrs

    def create(self, validated_data):
        return self.build_config(validated_data)


class AisConfigSerializer(serializers.Serializer):
    particles = serializers.IntegerField(min_value=1, default=settings.RBM_AIS_PARTICLES)
    intermediate = serializers.IntegerField(min_value=1, default=settings.RBM_AIS_INTERMEDIATE)

    def create(self, validated_data):
        return AisConfig(**validated_data)


class ExperimentSpecSerializer(TrainConfigSerializer):
    """
    Flat experiment settings: TrainConfig fields plus data source, model
    size, evaluation and trial layout. save() returns an ExperimentSpec.
    """
    dataset = serializers.CharField()
    test_dataset = serializers.CharField(required=False, allow_null=True, default=None)
    hidden = serializers.IntegerField(min_value=1)
    eval_method = serializers.ChoiceField(choices=EVAL_METHODS, default='exact')
    output_dir = serializers.CharField(required=False, default='')
    trials = serializers.IntegerField(min_value=1, default=1)
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), required=False, allow_empty=False)
    binarization = serializers.ChoiceField(choices=['stochastic', 'threshold'], default='stochastic')
    threshold = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.5)
    data_seed = serializers.IntegerField(min_value=0, default=0)
    limit = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    test_limit = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    enumeration_cap = serializers.IntegerField(min_value=1, default=settings.RBM_ENUMERATION_CAP)
    ais_particles = serializers.IntegerField(min_value=1, default=settings.RBM_AIS_PARTICLES)
    ais_intermediate = serializers.IntegerField(min_value=1, default=settings.RBM_AIS_INTERMEDIATE)
    name = serializers.CharField(required=False, allow_blank=True, default='')

    def validate(self, attrs):
        attrs = super().validate(attrs)
        seeds = attrs.get('seeds')
        if seeds is None:
            attrs['seeds'] = [attrs['seed'] + k for k in range(attrs['trials'])]
        elif 'trials' in self.initial_data and len(seeds) != attrs['trials']:
            raise serializers.ValidationError(
                {'seeds': f"{len(seeds)} seeds given for {attrs['trials']} trials."}
            )
        if not attrs['output_dir']:
            label = attrs['name'] or f"{attrs['algorithm'].lower()}-{attrs['dataset'].replace(':', '-')}"
            attrs['output_dir'] = str(Path(settings.RBM_OUTPUT_DIR) / Path(label).name)
        return attrs

    def create(self, validated_data):
        spec = ExperimentSpec(
            config=self.build_config(validated_data),
            dataset=validated_data['dataset'],
            hidden=validated_data['hidden'],
            output_dir=Path(validated_data['output_dir']),
            seeds=validated_data['seeds'],
            test_dataset=validated_data['test_dataset'],
            eval_method=validated_data['eval_method'],
            binarization=validated_data['binarization'],
            threshold=validated_data['threshold'],
            data_seed=validated_data['data_seed'],
            limit=validated_data['limit'],
            test_limit=validated_data['test_limit'],
            enumeration_cap=validated_data['enumeration_cap'],
            ais=AisConfig(validated_data['ais_particles'], validated_data['ais_intermediate']),
            name=validated_data['name'],
        )
        try:
            return spec.validate()
        except ConfigError as e:
            raise serializers.ValidationError(e.message)


class TrialRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = TrialRun
        fields = [
            'trial_index',
            'seed',
            'status',
            'task_id',
            'final_train_ll',
            'final_test_ll',
            'wall_seconds',
            'error_code',
            'error_message',
        ]
        read_only_fields = fields


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Run status with its trials, as printed by the `runs` command."""
    trials = TrialRunSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id',
            'name',
            'algorithm',
            'dataset',
            'hidden_units',
            'output_dir',
            'status',
            'created_at',
            'trials',
        ]
        read_only_fields = fields
