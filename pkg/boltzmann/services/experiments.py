"""
Experiment specifications, multi-trial summaries, hyperparameter grids and
timing benchmarks.
"""
import itertools
import json
import logging
import math
import os
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .data import BinaryDataset, load_dataset
from .evaluation import AisConfig, make_evaluator
from .exceptions import ConfigError, ContractViolation
from .model import DEFAULT_ENUMERATION_CAP
from .training import Algorithm, TrainConfig, TrainTrace, train

logger = logging.getLogger(__name__)

EVAL_METHODS = ('exact', 'ais', 'none')
BENCH_ALGORITHMS = ('CD', 'CG', 'SDCP', 'SDCPD')
SUMMARY_COLUMNS = ['epoch', 'train_ll_mean', 'train_ll_max', 'test_ll_mean', 'test_ll_max', 'trials']


@dataclass
class ExperimentSpec:
    """A TrainConfig plus where the data comes from and how trials are run."""
    config: TrainConfig
    dataset: str
    hidden: int
    output_dir: Path
    seeds: List[int]
    test_dataset: Optional[str] = None
    eval_method: str = 'exact'
    binarization: str = 'stochastic'
    threshold: float = 0.5
    data_seed: int = 0
    limit: Optional[int] = None
    test_limit: Optional[int] = None
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    ais: AisConfig = field(default_factory=AisConfig)
    name: str = ''

    @property
    def trials(self) -> int:
        return len(self.seeds)

    def validate(self) -> 'ExperimentSpec':
        self.config.validate()
        if self.trials < 1:
            raise ConfigError("an experiment needs at least one trial")
        if self.hidden < 1:
            raise ConfigError(f"hidden layer needs at least one unit, got {self.hidden}")
        if self.eval_method not in EVAL_METHODS:
            raise ConfigError(f"unknown evaluation method {self.eval_method!r}")
        self.output_dir = Path(self.output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {self.output_dir}: {e}") from e
        if not os.access(self.output_dir, os.W_OK):
            raise ConfigError(f"output directory {self.output_dir} is not writable")
        return self

    def to_dict(self) -> dict:
        return {
            'config': self.config.to_dict(),
            'dataset': self.dataset,
            'hidden': self.hidden,
            'output_dir': str(self.output_dir),
            'seeds': list(self.seeds),
            'test_dataset': self.test_dataset,
            'eval_method': self.eval_method,
            'binarization': self.binarization,
            'threshold': self.threshold,
            'data_seed': self.data_seed,
            'limit': self.limit,
            'test_limit': self.test_limit,
            'enumeration_cap': self.enumeration_cap,
            'ais': {'particles': self.ais.particles, 'intermediate': self.ais.intermediate},
            'name': self.name,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> 'ExperimentSpec':
        doc = dict(doc)
        doc['config'] = TrainConfig(**doc['config'])
        doc['ais'] = AisConfig(**doc.get('ais', {}))
        doc['output_dir'] = Path(doc['output_dir'])
        return cls(**doc)

    def load_datasets(self) -> Tuple[BinaryDataset, Optional[BinaryDataset]]:
        train_data = load_dataset(self.dataset, self.binarization, self.threshold, self.data_seed, self.limit)
        test_data = None
        if self.test_dataset:
            test_data = load_dataset(
                self.test_dataset, self.binarization, self.threshold, self.data_seed + 1, self.test_limit
            )
        return train_data, test_data

    def evaluator(self, train_data, test_data, seed: int):
        if self.eval_method == 'none':
            return None
        return make_evaluator(self.eval_method, train_data, test_data, self.enumeration_cap, self.ais, seed)

    def trace_path(self, trial_index: int) -> Path:
        return self.output_dir / f"trace_trial{trial_index}.csv"

    def params_path(self, trial_index: int) -> Path:
        return self.output_dir / f"params_trial{trial_index}.rbmp"

    def summary_path(self) -> Path:
        return self.output_dir / 'summary.csv'


def load_config_file(path) -> dict:
    """Key-value experiment settings from a TOML or JSON file."""
    path = Path(path)
    try:
        if path.suffix == '.toml':
            with open(path, 'rb') as handle:
                return tomllib.load(handle)
        return json.loads(path.read_text())
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e


def summarize_traces(traces: Sequence[TrainTrace]) -> pd.DataFrame:
    """Mean and max of train/test ATLL across trials at each evaluated epoch."""
    frames = [trace.to_frame() for trace in traces]
    if not frames:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    frame = pd.concat(frames, ignore_index=True)
    frame = frame[frame['train_ll'].notna()]
    summary = frame.groupby('epoch').agg(
        train_ll_mean=('train_ll', 'mean'),
        train_ll_max=('train_ll', 'max'),
        test_ll_mean=('test_ll', 'mean'),
        test_ll_max=('test_ll', 'max'),
        trials=('seed', 'count'),
    ).reset_index()
    return summary[SUMMARY_COLUMNS]


def write_summary(traces: Sequence[TrainTrace], path) -> Path:
    path = Path(path)
    summarize_traces(traces).to_csv(path, index=False)
    logger.info(f"Wrote summary of {len(traces)} trials to {path}")
    return path


GRID_COLUMNS = ['final_mean', 'final_max', 'final_min', 'trials']


def grid_search(spec: ExperimentSpec, grid: Mapping[str, Sequence]) -> pd.DataFrame:
    """
    Train every combination of grid values over the spec's seeds and rank
    the combinations by mean final train ATLL.

    Args:
        spec: base experiment; its config supplies every field the grid
            leaves out.
        grid: TrainConfig field name -> candidate values.

    Returns:
        One row per combination, best first, with mean, max and min of the
        final train ATLL across seeds. Diverged combinations rank last with
        NaN scores.
    """
    unknown = sorted(set(grid) - set(TrainConfig.field_names()))
    if unknown:
        raise ConfigError(f"unknown grid fields {unknown}")
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ConfigError("every grid field needs at least one value")
    if spec.eval_method == 'none':
        raise ConfigError("a grid search needs an evaluation method to rank by")

    names = list(grid)
    train_data, test_data = spec.load_datasets()
    rows = []
    for combo in itertools.product(*(grid[name] for name in names)):
        point = dict(zip(names, combo))
        # Only the final epoch is scored
        base = replace(spec.config, **{**point, 'eval_every': max(spec.config.epochs, 1)}).validate()
        try:
            finals = [
                train(train_data, replace(base, seed=seed), spec.hidden,
                      spec.evaluator(train_data, test_data, seed)).final().train_ll
                for seed in spec.seeds
            ]
        except ContractViolation as e:
            logger.warning(f"Grid point {point} diverged: {e}")
            finals = [math.nan]
        logger.info(f"Grid point {point}: mean final train ATLL {np.mean(finals):.4f}")
        rows.append({
            **point,
            'final_mean': float(np.mean(finals)),
            'final_max': float(np.max(finals)),
            'final_min': float(np.min(finals)),
            'trials': len(finals),
        })
    table = pd.DataFrame(rows, columns=names + GRID_COLUMNS)
    return table.sort_values('final_mean', ascending=False, kind='stable', na_position='last').reset_index(drop=True)


def best_config(table: pd.DataFrame, config: TrainConfig) -> TrainConfig:
    """`config` with the grid values of the top-ranked row applied."""
    if table.empty or math.isnan(table['final_mean'].iloc[0]):
        raise ConfigError("no grid point finished training")
    point = {}
    for name in table.columns:
        if name not in GRID_COLUMNS:
            value = table[name].iloc[0]
            point[name] = value.item() if hasattr(value, 'item') else value
    return replace(config, **point)


def time_algorithms(spec: ExperimentSpec, algorithms: Iterable[str] = BENCH_ALGORITHMS,
                    repeats: int = 10, clock: Callable[[], float] = time.perf_counter) -> pd.DataFrame:
    """
    Wall-clock seconds of fixed-epoch training runs without evaluation.

    Every algorithm first gets one untimed warm-up run, then the timed
    repeats go round-robin over the algorithms so that drift in machine
    load is shared between them.

    Args:
        spec: experiment whose dataset, hidden size and config are timed.
        algorithms: algorithm names, each run with the same config.
        repeats: timed runs per algorithm, seeded seed, seed+1, ...
        clock: monotonic timer in seconds.

    Returns:
        One row per algorithm with mean and standard deviation of seconds.
    """
    configs = {name: replace(spec.config, algorithm=Algorithm(name)) for name in algorithms}
    train_data, _ = spec.load_datasets()
    for config in configs.values():
        train(train_data, config, spec.hidden)

    seconds: Dict[str, List[float]] = {name: [] for name in configs}
    for repeat in range(repeats):
        for name, config in configs.items():
            start = clock()
            train(train_data, replace(config, seed=spec.config.seed + repeat), spec.hidden)
            seconds[name].append(clock() - start)

    rows = []
    for name, values in seconds.items():
        logger.info(f"{name}: {np.mean(values):.3f}s mean over {repeats} runs")
        rows.append({
            'algorithm': name,
            'mean_seconds': float(np.mean(values)),
            'std_seconds': float(np.std(values, ddof=1)) if repeats > 1 else 0.0,
            'runs': repeats,
        })
    return pd.DataFrame(rows, columns=['algorithm', 'mean_seconds', 'std_seconds', 'runs'])


def timing_ratios(table: pd.DataFrame) -> Dict[str, float]:
    """The comparisons that matter for cost parity: S-DCP/CD and S-DCP-D/S-DCP."""
    means = dict(zip(table['algorithm'], table['mean_seconds']))
    ratios = {}
    for numerator, denominator in (('SDCP', 'CD'), ('SDCPD', 'SDCP')):
        if numerator in means and denominator in means and means[denominator] > 0:
            ratios[f"{numerator}/{denominator}"] = means[numerator] / means[denominator]
    return ratios
