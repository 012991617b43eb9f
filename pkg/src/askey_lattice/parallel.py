"""Thread-pool helper honouring ``ASKEY_LATTICE_THREADS`` (0 or unset = auto)."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import ConfigError

ENV_THREADS = "ASKEY_LATTICE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def max_workers() -> int:
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{ENV_THREADS} must be >= 0, got {n}")
    return n if n else (os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(i) for i in items]`` evaluated on a thread pool, order preserved."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
