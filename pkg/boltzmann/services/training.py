"""
RBM trainers: CD(K), PCD, centered gradient (CG), S-DCP and S-DCP-D.

S-DCP treats the log-likelihood as g - f with both terms convex. Each
minibatch update linearizes g once at the current parameters and then takes
d gradient steps on f(theta) - theta^T grad g, estimating grad f with K'
Gibbs steps from chains that carry over between inner iterations. S-DCP-D
divides each step by a running estimate of the Hessian diagonal of f plus
epsilon.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.special import logit

from .exceptions import ConfigError, ShapeError
from .gradient import ema_update, hessian_diag_from_mean, negative_stats, positive_stats
from .model import (
    DEFAULT_ENUMERATION_CAP,
    HessianDiag,
    ParamStats,
    RbmParams,
    apply_step,
    exact_log_partition,
    hidden_probs,
)
from .data import BinaryDataset, minibatches
from .sampling import ChainState, RngStream, run_chains

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    CD = 'CD'
    PCD = 'PCD'
    CG = 'CG'
    SDCP = 'SDCP'
    SDCPD = 'SDCPD'


@dataclass
class TrainConfig:
    """
    Algorithm selection and hyperparameters. batch_size=0 means full batch.
    """
    algorithm: Algorithm = Algorithm.CD
    eta: float = 0.05
    K: int = 1
    d: int = 1
    K_prime: int = 1
    epsilon: float = 0.01
    lambda_H: float = 0.9
    nu_mu: float = 0.01
    nu_lambda: float = 0.01
    batch_size: int = 200
    epochs: int = 1
    seed: int = 0
    shuffle: bool = True
    eval_every: int = 1
    p_min: float = 1e-4
    init_std: float = 0.01
    cost_parity: bool = False

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)

    def validate(self) -> 'TrainConfig':
        problems = []
        if not self.eta > 0:
            problems.append(f"eta must be positive, got {self.eta}")
        if not self.epsilon > 0:
            problems.append(f"epsilon must be positive, got {self.epsilon}")
        for name in ('K', 'd', 'K_prime', 'eval_every'):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ('lambda_H', 'nu_mu', 'nu_lambda'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if not 0.0 < self.p_min < 0.5:
            problems.append(f"p_min must lie in (0, 0.5), got {self.p_min}")
        if self.batch_size < 0 or self.epochs < 0 or self.seed < 0:
            problems.append("batch_size, epochs and seed must be non-negative")
        if self.cost_parity and self.K != self.d * self.K_prime:
            problems.append(f"cost parity needs K = d*K' but {self.K} != {self.d}*{self.K_prime}")
        if problems:
            raise ConfigError('; '.join(problems))
        return self

    def to_dict(self) -> dict:
        values = asdict(self)
        values['algorithm'] = self.algorithm.value
        return values

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]


@dataclass
class OptimizerState:
    params: RbmParams
    rng: RngStream
    persistent_chains: Optional[ChainState] = None
    mu: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    hess_ema: Optional[HessianDiag] = None
    updates: int = 0


def _as_rows(data) -> np.ndarray:
    return data.expanded() if isinstance(data, BinaryDataset) else np.asarray(data, dtype=np.float64)


def _column_mean(data) -> np.ndarray:
    if isinstance(data, BinaryDataset):
        return data.mean()
    rows = np.asarray(data, dtype=np.float64)
    if rows.shape[0] == 0:
        raise ConfigError("cannot initialise from an empty dataset")
    return rows.mean(axis=0)


def init_params(data, m: int, n: int, rng: RngStream, p_min: float = 1e-4,
                std: float = 0.01) -> RbmParams:
    """
    Visible biases at the inverse sigmoid of the (clamped) data mean, hidden
    biases zero, weights i.i.d. N(0, std^2).
    """
    if len(data) == 0:
        raise ConfigError("cannot initialise from an empty dataset")
    mean = _column_mean(data)
    if mean.size != m:
        raise ShapeError(f"data has {mean.size} columns, model expects m={m}")
    b = logit(np.clip(mean, p_min, 1.0 - p_min))
    return RbmParams(rng.normal(std, (n, m)), b, np.zeros(n))


def init_state(data, n_hidden: int, config: TrainConfig) -> OptimizerState:
    rng = RngStream(config.seed)
    m = _column_mean(data).size
    params = init_params(data, m, n_hidden, rng, config.p_min, config.init_std)
    state = OptimizerState(params=params, rng=rng)
    if config.algorithm is Algorithm.CG:
        state.mu = _column_mean(data).copy()
        state.lam = np.full(n_hidden, 0.5)
    return state


def _check_batch(state: OptimizerState, batch: np.ndarray) -> np.ndarray:
    batch = np.array(batch, dtype=np.float64, ndmin=2)
    if batch.shape[0] == 0:
        raise ShapeError("minibatch is empty")
    if batch.shape[1] != state.params.m:
        raise ShapeError(f"minibatch has {batch.shape[1]} units, model has m={state.params.m}")
    return batch


def cd_update(state: OptimizerState, batch, config: TrainConfig) -> OptimizerState:
    """theta += eta * (positive - negative), chains restarted at the data for K steps."""
    batch = _check_batch(state, batch)
    params = state.params
    positive = positive_stats(params, batch)
    chains = run_chains(params, ChainState.from_visible(batch, state.rng), config.K)
    negative = negative_stats(params, chains.v)
    state.params = apply_step(params, positive - negative, config.eta)
    state.updates += 1
    return state


def pcd_update(state: OptimizerState, batch, config: TrainConfig) -> OptimizerState:
    """CD with chains that resume where the previous update left them."""
    batch = _check_batch(state, batch)
    if state.persistent_chains is None:
        state.persistent_chains = ChainState.from_visible(batch, state.rng)
    chains = state.persistent_chains
    count = batch.shape[0]
    if count > chains.size:
        raise ShapeError(f"minibatch of {count} rows but only {chains.size} persistent chains")
    # A short final batch uses the leading chains
    active = chains if count == chains.size else chains.take(count)
    params = state.params
    positive = positive_stats(params, batch)
    run_chains(params, active, config.K)
    if active is not chains:
        chains.v[:count] = active.v
        chains.h = None
    negative = negative_stats(params, active.v)
    state.params = apply_step(params, positive - negative, config.eta)
    state.updates += 1
    return state


class CenteredParams(RbmParams):
    """
    Parameters of the offset form
    E = -(h - lam)^T w (v - mu) - b^T (v - mu) - c^T (h - lam).
    """


def to_centered(params: RbmParams, mu: np.ndarray, lam: np.ndarray) -> CenteredParams:
    return CenteredParams(params.w, params.b + params.w.T @ lam, params.c + params.w @ mu)


def from_centered(centered: RbmParams, mu: np.ndarray, lam: np.ndarray) -> RbmParams:
    return RbmParams(centered.w, centered.b - centered.w.T @ lam, centered.c - centered.w @ mu)


def recenter(centered: RbmParams, mu: np.ndarray, lam: np.ndarray,
             mu_new: np.ndarray, lam_new: np.ndarray) -> CenteredParams:
    """Move to new offsets while representing the same distribution."""
    return CenteredParams(
        centered.w,
        centered.b + centered.w.T @ (lam_new - lam),
        centered.c + centered.w @ (mu_new - mu),
    )


def _centered_product(hidden: np.ndarray, visible: np.ndarray, mu, lam) -> np.ndarray:
    return (hidden - lam).T @ (visible - mu) / visible.shape[0]


def cg_update(state: OptimizerState, batch, config: TrainConfig) -> OptimizerState:
    """
    Centered gradient: offsets slide toward the batch means of the data
    (visible) and of p(h|data) (hidden), the model is recentered to the new
    offsets, then the centered parameters take a CD(K) gradient step.
    """
    batch = _check_batch(state, batch)
    if state.mu is None or state.lam is None:
        raise ConfigError("centered gradient needs offsets mu and lam; build the state with init_state")
    params = state.params
    count = batch.shape[0]
    h_data = hidden_probs(params, batch)
    chains = run_chains(params, ChainState.from_visible(batch, state.rng), config.K)
    h_model = hidden_probs(params, chains.v)

    mu_new = (1.0 - config.nu_mu) * state.mu + config.nu_mu * batch.mean(axis=0)
    lam_new = (1.0 - config.nu_lambda) * state.lam + config.nu_lambda * h_data.mean(axis=0)
    centered = recenter(to_centered(params, state.mu, state.lam), state.mu, state.lam, mu_new, lam_new)

    grad_w = (_centered_product(h_data, batch, mu_new, lam_new)
              - _centered_product(h_model, chains.v, mu_new, lam_new))
    grad_b = batch.sum(axis=0) / count - chains.v.sum(axis=0) / count
    grad_c = h_data.sum(axis=0) / count - h_model.sum(axis=0) / count
    stepped = apply_step(centered, ParamStats(grad_w, grad_b, grad_c), config.eta)

    state.params = from_centered(stepped, mu_new, lam_new)
    state.mu, state.lam = mu_new, lam_new
    state.updates += 1
    return state


def _dc_inner_loop(state: OptimizerState, batch: np.ndarray, config: TrainConfig,
                   scaled: bool) -> OptimizerState:
    """
    d descent steps on f(theta) - theta^T grad g(theta_t); the linearization
    is taken once and chains restart at the batch on entry.
    """
    positive = positive_stats(state.params, batch)
    chains = ChainState.from_visible(batch, state.rng)
    theta = state.params
    for _ in range(config.d):
        run_chains(theta, chains, config.K_prime)
        negative = negative_stats(theta, chains.v)
        if scaled:
            fresh = hessian_diag_from_mean(negative)
            state.hess_ema = fresh if state.hess_ema is None else ema_update(
                state.hess_ema, fresh, config.lambda_H)
            rate = state.hess_ema.map(lambda diag: config.eta / (diag + config.epsilon))
        else:
            rate = config.eta
        theta = apply_step(theta, positive - negative, rate)
    state.params = theta
    state.updates += 1
    return state


def sdcp_update(state: OptimizerState, batch, config: TrainConfig) -> OptimizerState:
    return _dc_inner_loop(state, _check_batch(state, batch), config, scaled=False)


def sdcpd_update(state: OptimizerState, batch, config: TrainConfig) -> OptimizerState:
    """
    S-DCP with per-parameter steps eta / (H_s + epsilon), H the exponential
    average of p(1-p) over the negative-phase means of each inner iteration.
    """
    if not config.epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {config.epsilon}")
    return _dc_inner_loop(state, _check_batch(state, batch), config, scaled=True)


UPDATES: Dict[Algorithm, Callable[[OptimizerState, np.ndarray, TrainConfig], OptimizerState]] = {
    Algorithm.CD: cd_update,
    Algorithm.PCD: pcd_update,
    Algorithm.CG: cg_update,
    Algorithm.SDCP: sdcp_update,
    Algorithm.SDCPD: sdcpd_update,
}


def dc_inner_objective(params: RbmParams, anchor_grad_g: ParamStats,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Exact f(theta) - theta^T grad g at a fixed linearization point."""
    theta = np.concatenate([params.w.ravel(), params.b, params.c])
    return exact_log_partition(params, cap=cap) - float(theta @ anchor_grad_g.flat())


@dataclass
class EpochRecord:
    epoch: int
    train_ll: float = math.nan
    test_ll: float = math.nan
    wall_seconds: float = 0.0


TRACE_COLUMNS = ['epoch', 'train_ll', 'test_ll', 'wall_seconds', 'algorithm', 'seed']


@dataclass
class TrainTrace:
    """Per-epoch training time and, on evaluated epochs, likelihoods."""
    algorithm: str
    seed: int
    records: List[EpochRecord] = field(default_factory=list)
    params: Optional[RbmParams] = None

    def evaluated(self) -> List[EpochRecord]:
        return [r for r in self.records if not math.isnan(r.train_ll)]

    def final(self) -> Optional[EpochRecord]:
        evaluated = self.evaluated()
        return evaluated[-1] if evaluated else None

    def train_seconds(self) -> float:
        return sum(r.wall_seconds for r in self.records)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(r) for r in self.records],
                             columns=['epoch', 'train_ll', 'test_ll', 'wall_seconds'])
        frame['algorithm'] = self.algorithm
        frame['seed'] = self.seed
        return frame[TRACE_COLUMNS]

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path) -> 'TrainTrace':
        frame = pd.read_csv(path, float_precision='round_trip')
        algorithm = str(frame['algorithm'].iloc[0]) if len(frame) else ''
        seed = int(frame['seed'].iloc[0]) if len(frame) else 0
        records = [
            EpochRecord(int(row.epoch), float(row.train_ll), float(row.test_ll), float(row.wall_seconds))
            for row in frame.itertuples()
        ]
        return cls(algorithm, seed, records)


EvalHook = Callable[[RbmParams, int], Dict[str, float]]


def train(data, config: TrainConfig, n_hidden: int, eval_hook: Optional[EvalHook] = None,
          state: Optional[OptimizerState] = None) -> TrainTrace:
    """
    Run a fixed number of epochs (no stopping criterion). The hook is called
    before training, every `eval_every` epochs and after the last epoch.

    Args:
        data: BinaryDataset or (N, m) array; weighted rows are expanded into minibatches
        config: Algorithm and hyperparameters, validated before the first update
        n_hidden: Number of hidden units for a fresh model
        eval_hook: Called as hook(params, epoch) and returning train_ll / test_ll
        state: Optimizer state to continue from instead of a seeded init_state

    Returns:
        TrainTrace with one record per epoch (epoch 0 included) and the final parameters
    """
    config.validate()
    state = state or init_state(data, n_hidden, config)
    update = UPDATES[config.algorithm]
    batch_size = config.batch_size or len(_as_rows(data))
    trace = TrainTrace(config.algorithm.value, config.seed)

    def record(epoch: int, seconds: float):
        entry = EpochRecord(epoch, wall_seconds=seconds)
        if eval_hook is not None and (epoch % config.eval_every == 0 or epoch == config.epochs):
            metrics = eval_hook(state.params, epoch)
            entry.train_ll = float(metrics.get('train_ll', math.nan))
            entry.test_ll = float(metrics.get('test_ll', math.nan))
            logger.info(
                f"{config.algorithm.value} seed={config.seed} epoch {epoch}: "
                f"train_ll={entry.train_ll:.4f} test_ll={entry.test_ll:.4f}"
            )
        trace.records.append(entry)

    record(0, 0.0)
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        for batch in minibatches(data, batch_size, config.shuffle, state.rng):
            update(state, batch, config)
        record(epoch, time.perf_counter() - start)
        logger.debug(f"Epoch {epoch} done after {state.updates} updates")
    trace.params = state.params
    return trace
