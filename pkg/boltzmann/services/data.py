"""
Datasets: Bars & Stripes synthesis, IDX/BMAT/CSV ingestion, binarization
and minibatch iteration.
"""
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from .exceptions import ConfigError, ContractViolation, DataFormatError
from .sampling import RngStream

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
# Refuse headers that promise more elements than any desk-scale file holds
MAX_IDX_ELEMENTS = 2 ** 34

BMAT_MAGIC = b'BMAT'
_BMAT_HEADER = struct.Struct('<4sQQ')

BARS_STRIPES_PREFIX = 'bars-stripes'
BARS_STRIPES_MODES = ('distinct', 'weighted', 'sampled')


@dataclass(frozen=True)
class BinaryDataset:
    """
    Binary rows (N x m) with optional integer multiplicities.
    """
    rows: np.ndarray
    weights: Optional[np.ndarray] = None
    name: str = ''

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, ndmin=2)
        if rows.size and not np.isin(rows, (0.0, 1.0)).all():
            raise ContractViolation(f"dataset {self.name or '<unnamed>'} has non-binary entries")
        object.__setattr__(self, 'rows', rows)
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if weights.size != rows.shape[0]:
                raise ContractViolation(f"{weights.size} weights for {rows.shape[0]} rows")
            if (weights < 1).any():
                raise ContractViolation("row multiplicities must be at least 1")
            object.__setattr__(self, 'weights', weights)

    def __len__(self):
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def mean(self) -> np.ndarray:
        """Column means, weighted by multiplicity."""
        if len(self) == 0:
            raise ContractViolation("mean of an empty dataset")
        return np.average(self.rows, axis=0, weights=self.weights)

    def expanded(self) -> np.ndarray:
        """Rows repeated by their multiplicities."""
        if self.weights is None:
            return self.rows
        counts = np.rint(self.weights).astype(np.int64)
        if not np.allclose(counts, self.weights):
            raise ContractViolation("only integer multiplicities can be expanded into rows")
        return np.repeat(self.rows, counts, axis=0)

    def head(self, count: int) -> 'BinaryDataset':
        weights = None if self.weights is None else self.weights[:count]
        return BinaryDataset(self.rows[:count], weights, self.name)


# Bars & Stripes

def bars_stripes_distribution(D: int) -> List[Tuple[np.ndarray, float]]:
    """
    Exact distribution of the generator: every row is set to all-zeros or
    all-ones by a fair coin, then the image is rotated by 90 degrees with
    probability 0.5. Duplicate outcomes (the constant images) are merged.
    """
    if D < 1:
        raise ConfigError(f"Bars & Stripes side length must be at least 1, got {D}")
    outcome_prob = 0.5 / 2 ** D
    merged = {}
    for code in range(2 ** D):
        row_bits = np.array([(code >> (D - 1 - r)) & 1 for r in range(D)], dtype=np.float64)
        bars = np.repeat(row_bits[:, None], D, axis=1)
        for pattern in (bars, np.rot90(bars)):
            key = pattern.astype(np.uint8).tobytes()
            if key in merged:
                merged[key] = (merged[key][0], merged[key][1] + outcome_prob)
            else:
                merged[key] = (pattern.ravel().copy(), outcome_prob)
    return list(merged.values())


def is_bars_stripes(pattern, D: int) -> bool:
    """True when every row is constant or every column is constant."""
    image = np.asarray(pattern).reshape(D, D)
    rows_constant = (image == image[:, :1]).all()
    cols_constant = (image == image[:1, :]).all()
    return bool(rows_constant or cols_constant)


def bars_stripes_dataset(D: int, mode: str = 'weighted', count: Optional[int] = None,
                         rng: Optional[RngStream] = None) -> BinaryDataset:
    """
    distinct: each pattern once. weighted: multiplicities proportional to the
    generative probabilities (constant images twice). sampled: `count` i.i.d.
    draws.
    """
    distribution = bars_stripes_distribution(D)
    patterns = np.stack([pattern for pattern, _ in distribution])
    probs = np.array([prob for _, prob in distribution])
    name = f"{BARS_STRIPES_PREFIX}:{D}:{mode}"
    if mode == 'distinct':
        return BinaryDataset(patterns, name=name)
    if mode == 'weighted':
        return BinaryDataset(patterns, np.rint(probs / probs.min()), name=name)
    if mode == 'sampled':
        if count is None or count < 1 or rng is None:
            raise ConfigError("sampled Bars & Stripes needs a positive count and a random stream")
        cumulative = np.cumsum(probs)
        picks = np.searchsorted(cumulative, rng.uniform(count) * cumulative[-1], side='right')
        return BinaryDataset(patterns[np.minimum(picks, len(probs) - 1)], name=name)
    raise ConfigError(f"unknown Bars & Stripes mode {mode!r}, expected one of {BARS_STRIPES_MODES}")


def bars_stripes_entropy(D: int) -> float:
    probs = np.array([prob for _, prob in bars_stripes_distribution(D)])
    return float(-(probs * np.log(probs)).sum())


# IDX files

def load_idx(path) -> np.ndarray:
    """
    Read an IDX ubyte file (images 0x00000803 or labels 0x00000801) as an
    (N, features) float array scaled to [0, 1].
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise DataFormatError(f"{path} is truncated before the IDX magic")
    magic = int.from_bytes(raw[:4], 'big')
    if magic not in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC):
        raise DataFormatError(f"{path} has IDX magic {magic:#010x}, expected images or labels")
    ndim = magic & 0xFF
    header_size = 4 + 4 * ndim
    if len(raw) < header_size:
        raise DataFormatError(f"{path} is truncated inside the IDX header")
    dims = struct.unpack(f'>{ndim}I', raw[4:header_size])
    features = math.prod(dims[1:])
    total = dims[0] * features
    if total > MAX_IDX_ELEMENTS:
        raise DataFormatError(f"{path} declares {dims}, which overflows the element limit")
    if len(raw) - header_size < total:
        raise DataFormatError(f"{path} holds {len(raw) - header_size} bytes, header declares {total}")
    if total == 0:
        return np.zeros((dims[0], features))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=total, offset=header_size)
    logger.info(f"Loaded IDX {path} with dimensions {dims}")
    return pixels.reshape(dims[0], features).astype(np.float64) / 255.0


def save_idx(images, path, image_shape: Optional[Tuple[int, int]] = None) -> Path:
    """Write [0, 1] intensities as an IDX image file (bytes round(x * 255))."""
    images = np.asarray(images, dtype=np.float64)
    images = images.reshape(images.shape[0], -1)
    rows, cols = image_shape or (math.isqrt(images.shape[1]),) * 2
    if rows * cols != images.shape[1]:
        raise ConfigError(f"image shape {rows}x{cols} does not match {images.shape[1]} features")
    payload = np.rint(images * 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = struct.pack('>IIII', IDX_IMAGES_MAGIC, images.shape[0], rows, cols)
    path.write_bytes(header + payload.tobytes())
    return path


def binarize(images, mode: str = 'threshold', threshold: float = 0.5,
             rng: Optional[RngStream] = None, name: str = '') -> BinaryDataset:
    """
    threshold: bit = intensity >= t. stochastic: bit ~ Bernoulli(intensity),
    drawn once so the binary dataset is fixed afterwards.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.size and (images.min() < 0.0 or images.max() > 1.0):
        raise ContractViolation("intensities must lie in [0, 1] before binarization")
    if mode == 'threshold':
        bits = (images >= threshold).astype(np.float64)
    elif mode == 'stochastic':
        if rng is None:
            raise ConfigError("stochastic binarization needs a random stream")
        bits = rng.bernoulli(images)
    else:
        raise ConfigError(f"unknown binarization mode {mode!r}")
    return BinaryDataset(np.atleast_2d(bits), name=name)


# BMAT and CSV files

def save_bmat(dataset: BinaryDataset, path) -> Path:
    rows = dataset.expanded().astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _BMAT_HEADER.pack(BMAT_MAGIC, rows.shape[0], rows.shape[1])
    path.write_bytes(header + np.packbits(rows.ravel()).tobytes())
    return path


def load_bmat(path) -> BinaryDataset:
    raw = Path(path).read_bytes()
    if len(raw) < _BMAT_HEADER.size:
        raise DataFormatError(f"{path} is truncated inside the BMAT header")
    magic, count, m = _BMAT_HEADER.unpack_from(raw)
    if magic != BMAT_MAGIC:
        raise DataFormatError(f"{path} has magic {magic!r}, expected {BMAT_MAGIC!r}")
    if count * m > MAX_IDX_ELEMENTS:
        raise DataFormatError(f"{path} declares {count}x{m} bits, which overflows the element limit")
    packed = np.frombuffer(raw, dtype=np.uint8, offset=_BMAT_HEADER.size)
    if packed.size * 8 < count * m:
        raise DataFormatError(f"{path} holds {packed.size * 8} bits, header declares {count * m}")
    bits = np.unpackbits(packed, count=count * m)
    return BinaryDataset(bits.reshape(count, m), name=Path(path).stem)


def save_csv(dataset: BinaryDataset, path) -> Path:
    frame = pd.DataFrame(dataset.rows.astype(np.int64), columns=[f"v{j}" for j in range(dataset.m)])
    if dataset.weights is not None:
        frame['weight'] = dataset.weights
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def load_csv(path) -> BinaryDataset:
    frame = pd.read_csv(path)
    weights = frame.pop('weight').to_numpy() if 'weight' in frame.columns else None
    return BinaryDataset(frame.to_numpy(dtype=np.float64), weights, name=Path(path).stem)


def load_dataset(source: str, binarization: str = 'stochastic', threshold: float = 0.5,
                 seed: int = 0, limit: Optional[int] = None) -> BinaryDataset:
    """
    Resolve a dataset source: "bars-stripes:D[:mode[:count]]", a .bmat or
    .csv file, or an IDX image file binarized on load.

    Args:
        source: Dataset source string or file path
        binarization: 'stochastic' or 'threshold', used for IDX images only
        threshold: Cut-off for threshold binarization
        seed: Seed for stochastic binarization and sampled Bars & Stripes
        limit: Keep at most the first `limit` rows

    Returns:
        BinaryDataset of 0/1 rows, with multiplicities for weighted Bars & Stripes
    """
    if source.startswith(BARS_STRIPES_PREFIX):
        parts = source.split(':')
        try:
            D = int(parts[1])
            count = int(parts[3]) if len(parts) > 3 else None
        except (IndexError, ValueError) as e:
            raise ConfigError(f"cannot parse dataset source {source!r}") from e
        mode = parts[2] if len(parts) > 2 else 'weighted'
        dataset = bars_stripes_dataset(D, mode, count, RngStream(seed))
    else:
        path = Path(source)
        if path.suffix == '.bmat':
            dataset = load_bmat(path)
        elif path.suffix == '.csv':
            dataset = load_csv(path)
        else:
            images = load_idx(path)
            if limit is not None:
                images = images[:limit]
            dataset = binarize(images, binarization, threshold, RngStream(seed), name=path.stem)
    if limit is not None and len(dataset) > limit:
        dataset = dataset.head(limit)
    logger.info(f"Dataset {source}: {len(dataset)} rows of {dataset.m} units")
    return dataset


def minibatches(data, batch_size: int, shuffle: bool, rng: Optional[RngStream]) -> Iterator[np.ndarray]:
    """
    One epoch of batches over the multiplicity-expanded rows; every row
    appears exactly once and the last batch may be short.
    """
    if batch_size < 1:
        raise ConfigError(f"batch size must be at least 1, got {batch_size}")
    rows = data.expanded() if isinstance(data, BinaryDataset) else np.asarray(data, dtype=np.float64)
    order = rng.permutation(rows.shape[0]) if shuffle else np.arange(rows.shape[0])
    for start in range(0, rows.shape[0], batch_size):
        yield rows[order[start:start + batch_size]]
