"""
Dyadic blocks, hyperbolic layers and the mixed weight on Z^d
Enumeration is exact and deterministic; every size is checked against a cap first
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from src.utils.errors import CapExceededError, IndexOverflowError, require
from src.utils.logger import get_logger

logger = get_logger(__name__)

MultiIndex = Tuple[int, ...]
BlockLabel = Tuple[int, ...]

# Exact counts above this do not fit int64 arrays
MAX_EXACT_COUNT = np.iinfo(np.int64).max


@dataclass(frozen=True)
class LayerSpec:
    """Hyperbolic layer H_n in dimension d"""

    n: int
    d: int

    def __post_init__(self):
        require(self.n >= 0, "n >= 0", n=self.n)
        require(self.d >= 1, "d >= 1", d=self.d)

    @property
    def cardinality(self) -> int:
        return layer_cardinality(self.n, self.d)


def _resolve_cap(cap: Optional[int]) -> int:
    if cap is not None:
        return cap
    from config import get_config
    return get_config().ENUM_CAP


def _check_cap(predicted: int, cap: Optional[int], what: str) -> None:
    limit = _resolve_cap(cap)
    if predicted > limit:
        raise CapExceededError(f"{what} would contain {predicted} indices, cap is {limit}",
                               predicted=predicted, cap=limit)


def block_of(k: Sequence[int]) -> BlockLabel:
    """Block label of a frequency: 0 for k_i = 0, else floor(log2|k_i|) + 1"""
    return tuple(abs(int(ki)).bit_length() for ki in k)


def block_labels(frequencies: np.ndarray) -> np.ndarray:
    """Vectorized block_of over the rows of an (N, d) integer array"""
    frequencies = np.asarray(frequencies, dtype=np.int64)
    # frexp exponent equals bit_length for integers below 2**53
    _, exponent = np.frexp(np.abs(frequencies).astype(np.float64))
    return exponent.astype(np.int64)


def layer_of(frequencies: np.ndarray) -> np.ndarray:
    """Layer index ||block_of(k)||_1 for every row"""
    labels = block_labels(frequencies)
    return labels.sum(axis=1) if labels.ndim == 2 else labels


def block_interval(j: int) -> np.ndarray:
    """Sorted 1-D dyadic block I_j"""
    require(j >= 0, "j >= 0", j=j)
    if j == 0:
        return np.zeros(1, dtype=np.int64)
    lo, hi = 1 << (j - 1), 1 << j
    positive = np.arange(lo, hi, dtype=np.int64)
    return np.concatenate([-positive[::-1], positive])


def block_size(j: Sequence[int]) -> int:
    size = 1
    for ji in j:
        size *= 1 if ji == 0 else (1 << ji)
    return size


def enumerate_block(j: Sequence[int], cap: Optional[int] = None) -> np.ndarray:
    """
    All frequencies in the product block of label j, lexicographic.

    Args:
        j: Block label, one non-negative entry per dimension
        cap: Maximum allowed size

    Returns:
        (|block|, d) int64 array with distinct rows
    """
    j = tuple(int(x) for x in j)
    require(len(j) >= 1 and all(x >= 0 for x in j), "j in N_0^d, d >= 1", j=list(j))
    _check_cap(block_size(j), cap, f"block {j}")
    axes = [block_interval(ji) for ji in j]
    grids = np.meshgrid(*axes, indexing='ij')
    return np.stack([g.ravel() for g in grids], axis=1)


def compositions(n: int, d: int) -> Iterator[BlockLabel]:
    """Block labels with ||j||_1 = n in lexicographic order"""
    require(n >= 0, "n >= 0", n=n)
    require(d >= 1, "d >= 1", d=d)
    if d == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, d - 1):
            yield (first,) + rest


def layer_cardinality(n: int, d: int) -> int:
    """|H_n| = 2^n * C(n+d-1, n) as an exact integer"""
    require(n >= 0, "n >= 0", n=n)
    require(d >= 1, "d >= 1", d=d)
    count = (1 << n) * int(comb(n + d - 1, n, exact=True))
    if count > MAX_EXACT_COUNT:
        raise IndexOverflowError(f"|H_{n}| in dimension {d} exceeds int64", n=n, d=d)
    return count


def enumerate_layer(n: int, d: int, cap: Optional[int] = None) -> np.ndarray:
    """
    All frequencies in layer H_n, grouped by block label.

    Args:
        n: Layer index
        d: Dimension
        cap: Maximum allowed size, checked before any allocation

    Returns:
        (|H_n|, d) int64 array
    """
    predicted = layer_cardinality(n, d)
    _check_cap(predicted, cap, f"layer H_{n} (d={d})")
    blocks = [enumerate_block(j, cap=predicted) for j in compositions(n, d)]
    layer = np.concatenate(blocks, axis=0)
    logger.debug("layer_enumerated", n=n, d=d, size=len(layer))
    return layer


def weight(k: Sequence[int]) -> int:
    """Mixed weight prod(1 + |k_i|)"""
    w = 1
    for ki in k:
        w *= 1 + abs(int(ki))
    return w


def weights(frequencies: np.ndarray) -> np.ndarray:
    """Vectorized weight over the rows of an (N, d) array, as float64"""
    frequencies = np.asarray(frequencies, dtype=np.int64)
    if frequencies.size == 0:
        return np.zeros(frequencies.shape[0], dtype=np.float64)
    return np.prod(1.0 + np.abs(frequencies).astype(np.float64), axis=1)


@lru_cache(maxsize=None)
def hyperbolic_cross_count(W: int, d: int) -> int:
    """Number of k in Z^d with weight(k) <= W"""
    if W < 1:
        return 0
    if d == 1:
        return 2 * W - 1
    # k_1 = 0 contributes factor 1, |k_1| = a - 1 >= 1 contributes two signs
    total = hyperbolic_cross_count(W, d - 1)
    a = 2
    while a <= W:
        q = W // a
        a_max = W // q
        total += 2 * (a_max - a + 1) * hyperbolic_cross_count(q, d - 1)
        a = a_max + 1
    return total


@lru_cache(maxsize=256)
def _cross_points(W: int, d: int) -> np.ndarray:
    if d == 1:
        return np.arange(-(W - 1), W, dtype=np.int64)[:, None]
    parts = []
    for k1 in range(-(W - 1), W):
        rest = _cross_points(W // (1 + abs(k1)), d - 1)
        head = np.full((rest.shape[0], 1), k1, dtype=np.int64)
        parts.append(np.hstack([head, rest]))
    return np.concatenate(parts, axis=0)


def hyperbolic_cross(W: int, d: int, cap: Optional[int] = None) -> np.ndarray:
    """All k in Z^d with weight(k) <= W, lexicographic"""
    require(W >= 1, "W >= 1", W=W)
    require(d >= 1, "d >= 1", d=d)
    _check_cap(hyperbolic_cross_count(W, d), cap, f"hyperbolic cross of weight {W} (d={d})")
    return _cross_points(W, d).copy()


def sort_by_weight(frequencies: np.ndarray) -> np.ndarray:
    """Order rows by (weight, lexicographic tuple)"""
    frequencies = np.asarray(frequencies, dtype=np.int64)
    if len(frequencies) == 0:
        return frequencies
    d = frequencies.shape[1]
    keys = tuple(frequencies[:, i] for i in reversed(range(d))) + (weights(frequencies),)
    return frequencies[np.lexsort(keys)]


def sorted_frequencies(N: int, d: int, cap: Optional[int] = None) -> np.ndarray:
    """
    The first N frequencies of Z^d in (weight, lexicographic) order.

    Args:
        N: Number of frequencies
        d: Dimension
        cap: Maximum size of the enumerated hyperbolic cross

    Returns:
        (N, d) int64 array, row i is J^{-1}(i + 1)
    """
    require(N >= 0, "N >= 0", N=N)
    require(d >= 1, "d >= 1", d=d)
    if N == 0:
        return np.zeros((0, d), dtype=np.int64)
    _check_cap(N, cap, "sorted frequency list")

    # Smallest W whose cross holds at least N points
    hi = 1
    while hyperbolic_cross_count(hi, d) < N:
        hi *= 2
    lo = hi // 2 + 1 if hi > 1 else 1
    while lo < hi:
        mid = (lo + hi) // 2
        if hyperbolic_cross_count(mid, d) >= N:
            hi = mid
        else:
            lo = mid + 1

    cross = hyperbolic_cross(hi, d, cap=cap)
    return sort_by_weight(cross)[:N]


def log_star(m: float) -> float:
    """max(log2 m, 1) for m >= 1"""
    require(m >= 1, "m >= 1", m=m)
    return max(float(np.log2(m)), 1.0)


def format_index_set(indices: Iterable[Sequence[int]]) -> str:
    """One index per line, integers separated by single spaces"""
    return ''.join(' '.join(str(int(x)) for x in row) + '\n' for row in indices)


def parse_index_set(text: str) -> List[MultiIndex]:
    """Inverse of format_index_set; blank lines are ignored"""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            rows.append(tuple(int(tok) for tok in line.split()))
    return rows


def order_weights_holds(n: int, d: int, cap: Optional[int] = None) -> bool:
    """sup weight on H_{n-d} <= inf weight on H_n"""
    require(n >= d, "n >= d", n=n, d=d)
    upper = weights(enumerate_layer(n - d, d, cap=cap)).max()
    lower = weights(enumerate_layer(n, d, cap=cap)).min()
    return bool(upper <= lower)
