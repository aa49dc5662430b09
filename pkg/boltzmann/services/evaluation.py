"""
Likelihood evaluation: exact ATLL for small models, annealed importance
sampling (AIS) estimates of log Z for large ones.
"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, EvaluationError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    RbmParams,
    exact_log_partition,
    g_value,
    logistic,
    mean_g_value,
    softplus,
)
from .sampling import ChainState, RngStream, gibbs_sweep

logger = logging.getLogger(__name__)

DEFAULT_AIS_PARTICLES = 100
DEFAULT_AIS_INTERMEDIATE = 10000


@dataclass(frozen=True)
class AisConfig:
    """Particle count and number of steps on a linear inverse-temperature grid."""
    particles: int = DEFAULT_AIS_PARTICLES
    intermediate: int = DEFAULT_AIS_INTERMEDIATE

    def __post_init__(self):
        if self.particles < 1 or self.intermediate < 1:
            raise ConfigError(
                f"AIS needs at least one particle and one step, got {self.particles}/{self.intermediate}"
            )

    def betas(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.intermediate + 1)


@dataclass
class AisResult:
    log_z_estimate: float
    log_weights: np.ndarray
    ess: float
    base_log_z: float

    def to_json(self) -> dict:
        return {
            'log_z_estimate': self.log_z_estimate,
            'base_log_z': self.base_log_z,
            'ess': self.ess,
            'particles': int(self.log_weights.size),
            'log_weights': self.log_weights.tolist(),
        }

    def dump(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json()))
        return path


def base_params(params: RbmParams) -> RbmParams:
    """The annealing start: the target's visible biases, no weights, no hidden biases."""
    return RbmParams(np.zeros_like(params.w), params.b, np.zeros_like(params.c))


def base_log_partition(params: RbmParams) -> float:
    return params.n * math.log(2.0) + float(softplus(params.b).sum())


def _tempered(params: RbmParams, beta: float) -> RbmParams:
    return RbmParams(beta * params.w, params.b, beta * params.c)


def effective_sample_size(log_weights: np.ndarray) -> float:
    return float(np.exp(2.0 * logsumexp(log_weights) - logsumexp(2.0 * log_weights)))


def ais_log_partition(params: RbmParams, cfg: AisConfig, rng: RngStream) -> AisResult:
    """
    Anneal from the base model to the target by scaling w and c with beta.
    Particles start as exact base samples and take one Gibbs sweep per
    intermediate temperature.

    Args:
        params: Target model
        cfg: Particle count and number of intermediate temperatures
        rng: Stream the per-particle streams are spawned from

    Returns:
        AisResult with the log Z estimate, the final log-weights and their effective sample size
    """
    betas = cfg.betas()
    streams = rng.spawn(cfg.particles)
    base_probs = logistic(params.b)
    chains = ChainState(np.stack([r.bernoulli(base_probs) for r in streams]), streams)
    log_weights = np.zeros(cfg.particles)

    previous = base_params(params)
    for k in range(1, betas.size):
        current = _tempered(params, betas[k])
        log_weights += g_value(current, chains.v) - g_value(previous, chains.v)
        if k < betas.size - 1:
            gibbs_sweep(current, chains)
        previous = current

    bad = np.flatnonzero(~np.isfinite(log_weights))
    if bad.size:
        diagnostics = {'particles': bad.tolist(), 'log_weights': log_weights[bad].tolist()}
        logger.error(f"AIS produced non-finite weights for particles {bad.tolist()}")
        raise EvaluationError(f"{bad.size} AIS particles have non-finite log-weights", diagnostics)

    base_log_z = base_log_partition(params)
    estimate = base_log_z + float(logsumexp(log_weights) - math.log(cfg.particles))
    result = AisResult(estimate, log_weights, effective_sample_size(log_weights), base_log_z)
    logger.info(f"AIS log Z = {estimate:.4f} (ESS {result.ess:.1f}/{cfg.particles})")
    return result


def estimate_atll(params: RbmParams, data, log_z: float) -> float:
    """Average log-likelihood given log Z from the exact or AIS path."""
    return mean_g_value(params, data) - log_z


EvalHook = Callable[[RbmParams, int], Dict[str, float]]


def exact_evaluator(train_data, test_data=None, cap: int = DEFAULT_ENUMERATION_CAP) -> EvalHook:
    def evaluate(params: RbmParams, epoch: int) -> Dict[str, float]:
        log_z = exact_log_partition(params, cap=cap)
        metrics = {'train_ll': estimate_atll(params, train_data, log_z)}
        if test_data is not None:
            metrics['test_ll'] = estimate_atll(params, test_data, log_z)
        return metrics
    return evaluate


def ais_evaluator(train_data, test_data=None, cfg: Optional[AisConfig] = None, seed: int = 0) -> EvalHook:
    """One AIS run per evaluated epoch, shared by the train and test estimates."""
    cfg = cfg or AisConfig()
    root = RngStream(seed)

    def evaluate(params: RbmParams, epoch: int) -> Dict[str, float]:
        log_z = ais_log_partition(params, cfg, root.fork(epoch)).log_z_estimate
        metrics = {'train_ll': estimate_atll(params, train_data, log_z)}
        if test_data is not None:
            metrics['test_ll'] = estimate_atll(params, test_data, log_z)
        return metrics
    return evaluate


def make_evaluator(method: str, train_data, test_data=None, cap: int = DEFAULT_ENUMERATION_CAP,
                   ais: Optional[AisConfig] = None, seed: int = 0) -> EvalHook:
    if method == 'exact':
        return exact_evaluator(train_data, test_data, cap)
    if method == 'ais':
        return ais_evaluator(train_data, test_data, ais, seed)
    raise ConfigError(f"unknown evaluation method {method!r}, expected 'exact' or 'ais'")
