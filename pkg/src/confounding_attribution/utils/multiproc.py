import logging
import os
from functools import partial
from multiprocessing import Pool, cpu_count
from multiprocessing.pool import ThreadPool
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "THREADS"

# Flipped off by the CLI's --quiet flag
SHOW_PROGRESS = True


def default_workers() -> int:
    """Worker count from the ``THREADS`` environment variable, else all cores."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return cpu_count()
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"`{THREADS_ENV}` must be a positive integer, got {raw!r}.")
    if workers < 1:
        raise ValueError(f"`{THREADS_ENV}` must be a positive integer, got {workers}.")
    return workers


def parallelize(
    func: Callable[..., R],
    iterable: Sequence[T],
    length: Optional[int] = None,
    n_workers: Optional[int] = None,
    desc: Optional[str] = None,
    chunksize: Optional[int] = None,
    threads: bool = False,
    leave: bool = True,
    **func_kwargs,
) -> List[R]:
    """Map ``func`` over ``iterable`` on a worker pool, keeping input order.

    With one worker everything runs in the calling thread. ``threads=True``
    uses a thread pool so workers can share state such as a coalition cache.
    """
    workers = default_workers() if n_workers is None else n_workers
    chunksize = 1 if chunksize is None else chunksize
    total = len(iterable) if length is None else length
    func = partial(func, **func_kwargs)
    progress = partial(
        tqdm,
        desc=desc,
        dynamic_ncols=True,
        leave=leave,
        total=total,
        disable=not SHOW_PROGRESS,
    )

    if workers <= 1:
        return [func(item) for item in progress(iterable)]

    pool_cls = ThreadPool if threads else Pool
    with pool_cls(workers) as p:
        return list(progress(p.imap(func, iterable, chunksize=chunksize)))
