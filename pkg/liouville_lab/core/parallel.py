# core/parallel.py
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Map ``fn`` over ``items`` keeping input order, optionally on a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def chunk_ranges(total: int, chunk: int) -> List[range]:
    return [range(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def exact_sum(values: Sequence[float]) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def exact_mean(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("mean of an empty sample")
    return exact_sum(arr) / arr.size
