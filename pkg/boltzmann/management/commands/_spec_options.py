"""
Command-line options shared by `train` and `bench`.

Values are layered: preset, then config file, then flags. Flag names mirror
TrainConfig fields (--eta, --k-prime, --lambda-h, ...).
"""
from django.core.management.base import CommandError
from rest_framework import serializers

from boltzmann.serializers import ExperimentSpecSerializer
from boltzmann.services.exceptions import RbmError
from boltzmann.services.experiments import load_config_file
from boltzmann.services.presets import PRESETS, resolve_preset

# (flag, dest, type, help)
TRAIN_FLAGS = [
    ('--algorithm', 'algorithm', str, 'CD, PCD, CG, SDCP or SDCPD'),
    ('--eta', 'eta', float, 'learning rate'),
    ('--k', 'K', int, 'Gibbs steps for CD/PCD/CG'),
    ('--d', 'd', int, 'inner iterations for S-DCP(-D)'),
    ('--k-prime', 'K_prime', int, 'Gibbs steps per inner iteration'),
    ('--epsilon', 'epsilon', float, 'constant added to the Hessian diagonal'),
    ('--lambda-h', 'lambda_H', float, 'Hessian averaging memory'),
    ('--nu-mu', 'nu_mu', float, 'visible offset rate (CG)'),
    ('--nu-lambda', 'nu_lambda', float, 'hidden offset rate (CG)'),
    ('--batch-size', 'batch_size', int, 'minibatch size, 0 for full batch'),
    ('--epochs', 'epochs', int, 'training epochs'),
    ('--seed', 'seed', int, 'first trial seed'),
    ('--eval-every', 'eval_every', int, 'epochs between evaluations'),
    ('--p-min', 'p_min', float, 'clamp for the visible-bias initialisation'),
    ('--init-std', 'init_std', float, 'standard deviation of the initial weights'),
]

SPEC_FLAGS = [
    ('--dataset', 'dataset', str, 'bars-stripes:D[:mode[:count]], or an IDX/BMAT/CSV file'),
    ('--test-dataset', 'test_dataset', str, 'held-out dataset source'),
    ('--hidden', 'hidden', int, 'number of hidden units'),
    ('--eval-method', 'eval_method', str, 'exact, ais or none'),
    ('--output-dir', 'output_dir', str, 'directory for traces, parameters and summaries'),
    ('--trials', 'trials', int, 'number of seeded trials'),
    ('--binarization', 'binarization', str, 'stochastic or threshold (IDX sources)'),
    ('--threshold', 'threshold', float, 'threshold for threshold binarization'),
    ('--data-seed', 'data_seed', int, 'seed for dataset sampling and binarization'),
    ('--limit', 'limit', int, 'use only the first N training rows'),
    ('--test-limit', 'test_limit', int, 'use only the first N test rows'),
    ('--enumeration-cap', 'enumeration_cap', int, 'largest layer enumerated exactly'),
    ('--ais-particles', 'ais_particles', int, 'AIS particles'),
    ('--ais-intermediate', 'ais_intermediate', int, 'AIS intermediate distributions'),
    ('--name', 'name', str, 'experiment name'),
]


def add_spec_arguments(parser):
    parser.add_argument('--preset', choices=sorted(PRESETS), help='start from a published set-up')
    parser.add_argument('--config', help='TOML or JSON file with TrainConfig/experiment keys')
    for flag, dest, kind, help_text in TRAIN_FLAGS + SPEC_FLAGS:
        parser.add_argument(flag, dest=dest, type=kind, default=None, help=help_text)
    parser.add_argument('--seeds', type=int, nargs='+', default=None, help='explicit seed per trial')
    parser.add_argument('--no-shuffle', dest='shuffle', action='store_false', default=None)
    parser.add_argument('--cost-parity', dest='cost_parity', action='store_true', default=None,
                        help="require K = d*K'")


def merged_settings(options: dict) -> dict:
    """Preset < config file < flags."""
    values = {}
    if options.get('config'):
        try:
            file_values = load_config_file(options['config'])
        except OSError as e:
            raise CommandError(f"IO_ERROR: cannot read config file: {e}")
        except RbmError as e:
            raise CommandError(str(e))
    else:
        file_values = {}
    if options.get('preset'):
        algorithm = options.get('algorithm') or file_values.get('algorithm') or 'SDCPD'
        try:
            values.update(resolve_preset(options['preset'], algorithm))
        except RbmError as e:
            raise CommandError(str(e))
    values.update(file_values)
    for _, dest, _, _ in TRAIN_FLAGS + SPEC_FLAGS:
        if options.get(dest) is not None:
            values[dest] = options[dest]
    for dest in ('seeds', 'shuffle', 'cost_parity'):
        if options.get(dest) is not None:
            values[dest] = options[dest]
    # Explicit seeds decide the trial count unless trials was also set explicitly
    if values.get('seeds') is not None and 'trials' not in file_values and options.get('trials') is None:
        values.pop('trials', None)
    return values


def build_spec(options: dict):
    serializer = ExperimentSpecSerializer(data=merged_settings(options))
    if not serializer.is_valid():
        raise CommandError(f"INVALID_CONFIG: {dict(serializer.errors)}")
    try:
        return serializer.save()
    except serializers.ValidationError as e:
        raise CommandError(f"INVALID_CONFIG: {e.detail}")
