"""
Sufficient statistics, exact gradients of log Z and the Hessian diagonal.

All statistics are positive quantities: means of (h v^T, v, h) with the hidden
layer replaced by its conditional mean p(h=1|v). The likelihood gradient is
positive phase minus negative phase.
"""
import numpy as np

from .exceptions import ConfigError, ContractViolation, IntractableSizeError, ShapeError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    HessianDiag,
    ParamStats,
    RbmParams,
    binary_states,
    energy,
    exact_log_partition,
    g_value,
    hidden_probs,
    iter_state_blocks,
    rows_and_weights,
    visible_probs,
)

FULL_HESSIAN_CAP = 12


def positive_stats(params: RbmParams, v, weights=None) -> ParamStats:
    """
    E_{p(h|v)}[(h v^T, v, h)] for one visible vector, or its (weighted) mean
    over the rows of a batch.
    """
    rows, row_weights = rows_and_weights(v)
    weights = row_weights if weights is None else weights
    if rows.shape[0] == 0:
        raise ShapeError("statistics need at least one visible vector")
    probs = hidden_probs(params, rows)
    if weights is None:
        count = rows.shape[0]
        return ParamStats(probs.T @ rows / count, rows.sum(axis=0) / count, probs.sum(axis=0) / count)
    weights = np.asarray(weights, dtype=np.float64)
    weights = weights / weights.sum()
    return ParamStats((probs * weights[:, None]).T @ rows, weights @ rows, weights @ probs)


def negative_stats(params: RbmParams, v_tilde, weights=None) -> ParamStats:
    """The estimate of grad f from chain samples: same form as positive_stats."""
    return positive_stats(params, v_tilde, weights)


def hessian_diag_from_mean(mean_stats: ParamStats, tol: float = 1e-12) -> HessianDiag:
    """
    Diag of the Hessian of log Z from the model means of (h v^T, v, h).
    Each unit product is Bernoulli, so its variance is p(1 - p).
    """
    if mean_stats.min() < -tol or mean_stats.max() > 1.0 + tol:
        raise ContractViolation(
            f"mean statistics must lie in [0, 1], got range [{mean_stats.min()}, {mean_stats.max()}]"
        )
    clipped = mean_stats.map(lambda p: np.clip(p, 0.0, 1.0))
    return clipped.map(lambda p: p * (1.0 - p))


def ema_update(prev: HessianDiag, fresh: HessianDiag, lambda_h: float) -> HessianDiag:
    if not 0.0 <= lambda_h <= 1.0:
        raise ConfigError(f"lambda_H must lie in [0, 1], got {lambda_h}")
    if any(a.shape != b.shape for a, b in zip(prev.arrays(), fresh.arrays())):
        raise ShapeError("Hessian estimates have different shapes")
    return prev.zip_with(fresh, lambda old, new: lambda_h * old + (1.0 - lambda_h) * new)


def exact_model_stats(params: RbmParams, cap: int = DEFAULT_ENUMERATION_CAP) -> ParamStats:
    """
    Exact E_{p(v,h)}[(h v^T, v, h)], i.e. grad log Z, enumerating the smaller
    layer and using conditional means for the other.
    """
    log_z = exact_log_partition(params, cap=cap)
    stats = ParamStats.zeros_like(params)
    if params.m <= params.n:
        for states in iter_state_blocks(params.m):
            p = np.exp(g_value(params, states) - log_z)
            ph = hidden_probs(params, states)
            stats.dw += (ph * p[:, None]).T @ states
            stats.db += p @ states
            stats.dc += p @ ph
    else:
        swapped = params.transposed()
        for states in iter_state_blocks(params.n):
            p = np.exp(g_value(swapped, states) - log_z)
            pv = visible_probs(params, states)
            stats.dw += (states * p[:, None]).T @ pv
            stats.db += p @ pv
            stats.dc += p @ states
    return stats


def exact_gradient_f(params: RbmParams, cap: int = DEFAULT_ENUMERATION_CAP) -> ParamStats:
    return exact_model_stats(params, cap)


def _joint_features(params: RbmParams, states: np.ndarray) -> np.ndarray:
    v, h = states[:, :params.m], states[:, params.m:]
    products = (h[:, :, None] * v[:, None, :]).reshape(states.shape[0], -1)
    return np.hstack([products, v, h])


def full_hessian_exact(params: RbmParams, cap: int = FULL_HESSIAN_CAP) -> np.ndarray:
    """
    Cov_{p(v,h)}[grad E, grad E] over all parameters, ordered like
    ParamStats.flat(). Enumerates the joint space; for oracles only.
    """
    if params.m + params.n > cap:
        raise IntractableSizeError(
            f"full Hessian needs 2^{params.m + params.n} joint states, cap is {cap} units"
        )
    states = binary_states(params.m + params.n)
    log_weight = -energy(params, states[:, :params.m], states[:, params.m:])
    p = np.exp(log_weight - exact_log_partition(params))
    features = _joint_features(params, states)
    centred = features - p @ features
    cov = (centred * p[:, None]).T @ centred
    return 0.5 * (cov + cov.T)
