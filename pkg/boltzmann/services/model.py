"""
Binary-binary RBM: parameters, energy, conditionals and exact likelihood.

The weight matrix is hidden x visible (n x m) everywhere. The log-likelihood
of a visible vector splits into two convex functions of the parameters,
log p(v) = g(theta, v) - f(theta), with g the analytic marginal over the
hidden layer and f = log Z.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Tuple, Union

import numpy as np
from scipy.special import expit, logsumexp

from .exceptions import ContractViolation, IntractableSizeError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 25

# States enumerated per block when summing over a layer
_BLOCK_BITS = 16


def logistic(x):
    return expit(x)


def softplus(x):
    """log(1 + e^x) without overflow for large |x|."""
    return np.logaddexp(0.0, x)


@dataclass(frozen=True)
class RbmParams:
    """
    Weights w (n x m), visible biases b (m,) and hidden biases c (n,).
    Arrays are copied to float64 and frozen on construction.
    """
    w: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        c = np.array(self.c, dtype=np.float64).reshape(-1)
        if w.ndim != 2:
            raise ShapeError(f"weights must be a matrix, got shape {w.shape}")
        if w.shape != (c.size, b.size):
            raise ShapeError(
                f"weights of shape {w.shape} do not match n={c.size} hidden, m={b.size} visible"
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ContractViolation("parameters contain NaN or Inf")
        for arr in (w, b, c):
            arr.flags.writeable = False
        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'c', c)

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def n(self) -> int:
        return self.c.size

    @classmethod
    def zeros(cls, m: int, n: int) -> 'RbmParams':
        return cls(np.zeros((n, m)), np.zeros(m), np.zeros(n))

    def transposed(self) -> 'RbmParams':
        """The same model with the roles of the two layers swapped."""
        return RbmParams(self.w.T, self.c, self.b)

    def replace(self, **changes) -> 'RbmParams':
        fields = {'w': self.w, 'b': self.b, 'c': self.c}
        fields.update(changes)
        return RbmParams(**fields)

    def __eq__(self, other):
        if not isinstance(other, RbmParams):
            return NotImplemented
        return (
            np.array_equal(self.w, other.w)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None


@dataclass
class ParamStats:
    """
    One value per parameter, laid out like RbmParams. Used for gradients,
    sufficient-statistic means and Hessian diagonals.
    """
    dw: np.ndarray
    db: np.ndarray
    dc: np.ndarray

    @classmethod
    def zeros_like(cls, params: RbmParams) -> 'ParamStats':
        return cls(np.zeros_like(params.w), np.zeros_like(params.b), np.zeros_like(params.c))

    @classmethod
    def full_like(cls, params: RbmParams, value: float) -> 'ParamStats':
        return cls(
            np.full_like(params.w, value), np.full_like(params.b, value), np.full_like(params.c, value)
        )

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.dw, self.db, self.dc

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> 'ParamStats':
        return ParamStats(fn(self.dw), fn(self.db), fn(self.dc))

    def zip_with(self, other: 'ParamStats', fn) -> 'ParamStats':
        return ParamStats(fn(self.dw, other.dw), fn(self.db, other.db), fn(self.dc, other.dc))

    def flat(self) -> np.ndarray:
        """Concatenate as [w (row-major), b, c]."""
        return np.concatenate([self.dw.ravel(), self.db, self.dc])

    def matches(self, params: RbmParams) -> bool:
        return (
            self.dw.shape == params.w.shape
            and self.db.shape == params.b.shape
            and self.dc.shape == params.c.shape
        )

    def min(self) -> float:
        return min(float(a.min()) for a in self.arrays() if a.size)

    def max(self) -> float:
        return max(float(a.max()) for a in self.arrays() if a.size)

    def __add__(self, other):
        if isinstance(other, ParamStats):
            return self.zip_with(other, np.add)
        return self.map(lambda a: a + other)

    def __sub__(self, other):
        if isinstance(other, ParamStats):
            return self.zip_with(other, np.subtract)
        return self.map(lambda a: a - other)

    def __mul__(self, other):
        if isinstance(other, ParamStats):
            return self.zip_with(other, np.multiply)
        return self.map(lambda a: a * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamStats):
            return self.zip_with(other, np.divide)
        return self.map(lambda a: a / other)


HessianDiag = ParamStats


def apply_step(params: RbmParams, direction: ParamStats, rate: Union[float, ParamStats]) -> RbmParams:
    """theta + rate * direction, with a scalar or per-parameter rate."""
    if not direction.matches(params) or (isinstance(rate, ParamStats) and not rate.matches(params)):
        raise ShapeError(f"step does not match parameters of shape m={params.m}, n={params.n}")
    step = direction * rate
    return RbmParams(params.w + step.dw, params.b + step.db, params.c + step.dc)


def _check_last_dim(x: np.ndarray, size: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != size:
        raise ShapeError(f"{what} of shape {x.shape} does not match layer size {size}")
    return x


def energy(params: RbmParams, v, h):
    """E(v, h) = -h.w.v - b.v - c.h for a single pair or matching batches."""
    v = _check_last_dim(v, params.m, 'visible vector')
    h = _check_last_dim(h, params.n, 'hidden vector')
    interaction = np.einsum('...i,ij,...j->...', h, params.w, v)
    return -interaction - v @ params.b - h @ params.c


def hidden_probs(params: RbmParams, v) -> np.ndarray:
    v = _check_last_dim(v, params.m, 'visible vector')
    return logistic(v @ params.w.T + params.c)


def visible_probs(params: RbmParams, h) -> np.ndarray:
    h = _check_last_dim(h, params.n, 'hidden vector')
    return logistic(h @ params.w + params.b)


def g_value(params: RbmParams, v):
    """log sum_h exp(-E(v, h)), marginalised analytically over the hidden layer."""
    v = _check_last_dim(v, params.m, 'visible vector')
    return v @ params.b + softplus(v @ params.w.T + params.c).sum(axis=-1)


def free_energy(params: RbmParams, v):
    """F(v) = -log sum_h exp(-E(v, h)); p(v) is proportional to exp(-F(v))."""
    return -g_value(params, v)


def binary_states(k: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Rows are the binary codes of start..stop-1 over k bits, most significant first."""
    stop = 2 ** k if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.float64)


def iter_state_blocks(k: int) -> Iterator[np.ndarray]:
    block = 2 ** min(k, _BLOCK_BITS)
    for start in range(0, 2 ** k, block):
        yield binary_states(k, start, start + block)


def _enumeration_side(params: RbmParams, side: str, cap: int) -> Tuple[RbmParams, int]:
    """The parameters to enumerate over (transposed for the hidden side) and the layer width."""
    if side == 'auto':
        side = 'visible' if params.m <= params.n else 'hidden'
    if side == 'visible':
        target, width = params, params.m
    elif side == 'hidden':
        target, width = params.transposed(), params.n
    else:
        raise ValueError(f"unknown enumeration side {side!r}")
    if width > cap:
        raise IntractableSizeError(
            f"exact enumeration over {width} units exceeds the cap of {cap}; use AIS instead"
        )
    return target, width


def exact_log_partition(params: RbmParams, cap: int = DEFAULT_ENUMERATION_CAP,
                        side: str = 'auto') -> float:
    """
    log Z by enumerating the smaller layer (or the one named by `side`),
    summing exp(g) with the other layer marginalised analytically.
    """
    target, width = _enumeration_side(params, side, cap)
    logger.debug(f"Enumerating 2^{width} layer states for log Z")
    partial = [logsumexp(g_value(target, states)) for states in iter_state_blocks(width)]
    return float(logsumexp(partial))


def exact_visible_log_probs(params: RbmParams, cap: int = DEFAULT_ENUMERATION_CAP):
    """All 2^m visible states with their exact log-probabilities."""
    if params.m > cap:
        raise IntractableSizeError(
            f"exact visible distribution over {params.m} units exceeds the cap of {cap}"
        )
    states = binary_states(params.m)
    log_z = exact_log_partition(params, cap=cap)
    return states, g_value(params, states) - log_z


def rows_and_weights(data) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Accept a BinaryDataset or a plain (N, m) array."""
    if hasattr(data, 'rows'):
        return np.asarray(data.rows, dtype=np.float64), data.weights
    rows = np.asarray(data, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    return rows, None


def mean_g_value(params: RbmParams, data) -> float:
    rows, weights = rows_and_weights(data)
    if rows.shape[0] == 0:
        raise ShapeError("cannot average over an empty dataset")
    return float(np.average(g_value(params, rows), weights=weights))


def exact_avg_log_likelihood(params: RbmParams, data, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """(1/N) sum_i log p(v_i), multiplicity-weighted when the dataset carries weights."""
    return mean_g_value(params, data) - exact_log_partition(params, cap=cap)
