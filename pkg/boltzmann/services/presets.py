"""
Experiment presets with the published chain lengths, batch sizes, epoch
counts and hidden-layer sizes. Learning rates are starting points only;
each preset also names the per-algorithm search space that `grid_search`
explores to tune them.
"""
from .exceptions import ConfigError

# Bars & Stripes: full batch, K=4 for CD/PCD/CG and d=2, K'=2 for S-DCP(-D)
_BARS = {
    'dataset': 'bars-stripes:3',
    'eval_method': 'exact',
    'eval_every': 50,
    'trials': 25,
    'config': {
        'K': 4, 'd': 2, 'K_prime': 2,
        'batch_size': 0, 'epochs': 5000,
        'epsilon': 0.01, 'lambda_H': 0.9,
        'nu_mu': 0.01, 'nu_lambda': 0.01,
    },
    'eta': {'CD': 0.2, 'PCD': 0.2, 'CG': 0.2, 'SDCP': 0.1, 'SDCPD': 0.025},
    'grid': {
        'CD': {'eta': [0.05, 0.1, 0.2, 0.5]},
        'PCD': {'eta': [0.05, 0.1, 0.2, 0.5]},
        'CG': {'eta': [0.05, 0.1, 0.2, 0.5]},
        'SDCP': {'eta': [0.05, 0.1, 0.2, 0.3]},
        'SDCPD': {'eta': [0.01, 0.025, 0.05], 'epsilon': [0.01, 0.1]},
    },
}

PRESETS = {
    'bars3': {**_BARS, 'hidden': 4},
    'bars3-h8': {**_BARS, 'hidden': 8},
    'bars3-h16': {**_BARS, 'hidden': 16},
    # Large image sets: K=24 (d=6, K'=4), minibatches of 200, 200 epochs
    'mnist': {
        'dataset': 'train-images-idx3-ubyte',
        'hidden': 500,
        'eval_method': 'ais',
        'eval_every': 5,
        'trials': 10,
        'config': {
            'K': 24, 'd': 6, 'K_prime': 4,
            'batch_size': 200, 'epochs': 200,
            'epsilon': 0.01, 'lambda_H': 0.9,
            'nu_mu': 0.01, 'nu_lambda': 0.01,
        },
        'eta': {'CD': 0.05, 'PCD': 0.05, 'CG': 0.05, 'SDCP': 0.02, 'SDCPD': 0.005},
        'grid': {
            'CD': {'eta': [0.01, 0.05, 0.1]},
            'PCD': {'eta': [0.01, 0.05, 0.1]},
            'CG': {'eta': [0.01, 0.05, 0.1]},
            'SDCP': {'eta': [0.01, 0.02, 0.05]},
            'SDCPD': {'eta': [0.001, 0.005, 0.01], 'epsilon': [0.01, 0.1]},
        },
    },
}


def resolve_preset(name: str, algorithm: str = 'SDCPD') -> dict:
    """Flatten a preset into experiment-spec keys for one algorithm."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    if algorithm not in preset['eta']:
        raise ConfigError(f"unknown algorithm {algorithm!r}, expected one of {sorted(preset['eta'])}")
    values = dict(preset['config'])
    values['algorithm'] = algorithm
    values['eta'] = preset['eta'][algorithm]
    values['eval_every'] = preset['eval_every']
    values.update({
        'dataset': preset['dataset'],
        'hidden': preset['hidden'],
        'eval_method': preset['eval_method'],
        'trials': preset['trials'],
    })
    return values


def preset_grid(name: str, algorithm: str) -> dict:
    """The hyperparameter search space a preset declares for one algorithm."""
    try:
        grids = PRESETS[name]['grid']
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    if algorithm not in grids:
        raise ConfigError(f"unknown algorithm {algorithm!r}, expected one of {sorted(grids)}")
    return {field: list(values) for field, values in grids[algorithm].items()}
