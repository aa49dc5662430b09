"""
Block Gibbs sampling for binary RBMs.

Each chain owns an RngStream. A transition draws n uniforms for the hidden
layer (units ascending) and then m uniforms for the visible layer, so a
chain's trajectory depends only on its own stream.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError, DataFormatError, ShapeError
from .model import RbmParams, hidden_probs, visible_probs

logger = logging.getLogger(__name__)

# Sampling lengths used for generating model samples
LARGE_MODEL_SAMPLE_STEPS = 5000
SMALL_MODEL_SAMPLE_STEPS = 200
_SMALL_MODEL_VISIBLE_UNITS = 100


class RngStream:
    """
    Seeded PCG64 stream. Substreams are addressed by a path of fork indices,
    so fork(i) is independent of how many values the parent has drawn.
    """

    def __init__(self, seed: int, path: Sequence[int] = ()):
        self.seed = int(seed)
        self.path = tuple(int(i) for i in path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.PCG64(sequence))
        self._next_fork = 0
        # Uniform values consumed so far
        self.draws = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path}, draws={self.draws})"

    def uniform(self, size=None) -> np.ndarray:
        values = self._generator.random(size)
        self.draws += int(np.size(values))
        return values

    def bernoulli(self, probs) -> np.ndarray:
        probs = np.asarray(probs, dtype=np.float64)
        return (self.uniform(probs.shape) < probs).astype(np.float64)

    def normal(self, scale: float, size) -> np.ndarray:
        return self._generator.normal(0.0, scale, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def fork(self, index: int) -> 'RngStream':
        return RngStream(self.seed, self.path + (index,))

    def spawn(self, count: int) -> List['RngStream']:
        """`count` fresh substreams; successive calls never reuse an index."""
        start = self._next_fork
        self._next_fork += count
        return [self.fork(i) for i in range(start, start + count)]


@dataclass
class ChainState:
    """Visible state of each chain (rows of v), one stream per chain."""
    v: np.ndarray
    rngs: List[RngStream]
    h: Optional[np.ndarray] = None
    transitions: int = 0

    def __post_init__(self):
        self.v = np.array(self.v, dtype=np.float64, ndmin=2)
        if len(self.rngs) != self.v.shape[0]:
            raise ShapeError(f"{self.v.shape[0]} chains but {len(self.rngs)} random streams")

    @classmethod
    def from_visible(cls, v, rng: RngStream) -> 'ChainState':
        v = np.array(v, dtype=np.float64, ndmin=2)
        return cls(v, rng.spawn(v.shape[0]))

    @property
    def size(self) -> int:
        return self.v.shape[0]

    def take(self, count: int) -> 'ChainState':
        """The first `count` chains, sharing their streams with this state."""
        h = None if self.h is None else self.h[:count]
        return ChainState(self.v[:count], self.rngs[:count], h, self.transitions)


def _stacked_uniforms(rngs: List[RngStream], width: int) -> np.ndarray:
    return np.stack([r.uniform(width) for r in rngs])


def gibbs_transition(params: RbmParams, v, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
    """One block Gibbs step v -> h -> v' for a single chain."""
    h = (rng.uniform(params.n) < hidden_probs(params, v)).astype(np.float64)
    v_next = (rng.uniform(params.m) < visible_probs(params, h)).astype(np.float64)
    return v_next, h


def gibbs_sweep(params: RbmParams, chains: ChainState) -> ChainState:
    """Advance every chain by one transition, in place."""
    if chains.v.shape[1] != params.m:
        raise ShapeError(f"chains have {chains.v.shape[1]} visible units, model has {params.m}")
    h = (_stacked_uniforms(chains.rngs, params.n) < hidden_probs(params, chains.v)).astype(np.float64)
    v = (_stacked_uniforms(chains.rngs, params.m) < visible_probs(params, h)).astype(np.float64)
    chains.v, chains.h = v, h
    chains.transitions += 1
    return chains


def run_chains(params: RbmParams, chains: ChainState, steps: int) -> ChainState:
    if steps < 0:
        raise ConfigError(f"chain length must be non-negative, got {steps}")
    for _ in range(steps):
        gibbs_sweep(params, chains)
    return chains


def run_chain(params: RbmParams, v0, steps: int, rng: RngStream) -> np.ndarray:
    """v after `steps` transitions from v0; steps=0 returns v0 unchanged."""
    if steps < 0:
        raise ConfigError(f"chain length must be non-negative, got {steps}")
    v = np.array(v0, dtype=np.float64)
    for _ in range(steps):
        v, _ = gibbs_transition(params, v, rng)
    return v


def default_sample_steps(m: int) -> int:
    return SMALL_MODEL_SAMPLE_STEPS if m < _SMALL_MODEL_VISIBLE_UNITS else LARGE_MODEL_SAMPLE_STEPS


def generate_samples(params: RbmParams, count: int, steps: Optional[int], rng: RngStream) -> np.ndarray:
    """
    Model samples for inspection: each chain starts from fair-coin visible
    states and runs `steps` transitions. Returns a (count, m) array.
    """
    if count < 1:
        raise ConfigError(f"sample count must be at least 1, got {count}")
    steps = default_sample_steps(params.m) if steps is None else steps
    streams = rng.spawn(count)
    v0 = np.stack([r.bernoulli(np.full(params.m, 0.5)) for r in streams])
    chains = run_chains(params, ChainState(v0, streams), steps)
    logger.info(f"Generated {count} samples after {steps} Gibbs steps")
    return chains.v


def square_tile_shape(m: int) -> Tuple[int, int]:
    side = math.isqrt(m)
    return (side, side) if side * side == m else (1, m)


def grid_layout(count: int) -> Tuple[int, int]:
    """Rows x columns using the largest divisor of count not above its square root."""
    rows = max(r for r in range(1, math.isqrt(count) + 1) if count % r == 0)
    return rows, count // rows


def tile_samples(samples, tile_shape: Optional[Tuple[int, int]] = None,
                 grid: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Lay binary samples out as one grayscale image, 255 for an active unit."""
    samples = np.asarray(samples)
    count, m = samples.shape
    tile_h, tile_w = tile_shape or square_tile_shape(m)
    if tile_h * tile_w != m:
        raise ConfigError(f"tile shape {tile_h}x{tile_w} does not hold {m} visible units")
    rows, cols = grid or grid_layout(count)
    if rows * cols != count:
        raise ConfigError(f"{count} samples do not fill a {rows}x{cols} grid")
    tiles = samples.reshape(rows, cols, tile_h, tile_w)
    image = tiles.transpose(0, 2, 1, 3).reshape(rows * tile_h, cols * tile_w)
    return (image * 255).astype(np.uint8)


def write_pgm_grid(samples, path, tile_shape=None, grid=None) -> Path:
    image = tile_samples(samples, tile_shape, grid)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = image.shape
    with open(path, 'wb') as out:
        out.write(f"P5\n{width} {height}\n255\n".encode('ascii'))
        out.write(image.tobytes())
    logger.info(f"Wrote {width}x{height} sample grid to {path}")
    return path


def read_pgm(path) -> np.ndarray:
    """Parse a binary (P5) PGM with maxval below 256."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b'#':
            pos = raw.index(b'\n', pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataFormatError(f"{path} ends inside the PGM header")
        tokens.append(raw[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b'P5' or maxval > 255:
        raise DataFormatError(f"{path} is not an 8-bit binary PGM")
    pixels = raw[pos + 1:pos + 1 + width * height]
    if len(pixels) != width * height:
        raise DataFormatError(f"{path} holds {len(pixels)} pixels, expected {width * height}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
