import os
import logging
from multiprocessing import Pool, cpu_count
from typing import Callable, List, Optional, Sequence, TypeVar
from tqdm import tqdm

log = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

WORKERS_ENV = 'LEPAGE_SPDE_WORKERS'

def num_workers_from_env() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None:
        return cpu_count()
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} should be a positive integer, got {value!r}")
    if workers < 1:
        raise ValueError(f"{WORKERS_ENV} should be a positive integer, got {workers}")
    return workers

def parallel_map(
        func: Callable[[T], R],
        items: Sequence[T],
        num_workers: Optional[int] = None,
        progress: bool = False,
        desc: Optional[str] = None
    ) -> List[R]:
    '''
    map func over items with a process pool. Results come back in input
    order whatever the number of workers, so downstream reductions are
    deterministic.
    '''

    if num_workers is None:
        num_workers = num_workers_from_env()
    num_workers = max(1, min(num_workers, len(items)))

    if num_workers == 1:
        return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]

    log.debug("mapping %d items over %d processes", len(items), num_workers)
    with Pool(processes=num_workers) as pool:
        # imap keeps the input order
        chunksize = max(1, len(items) // (8 * num_workers))
        res = list(tqdm(pool.imap(func, items, chunksize), total=len(items), desc=desc, disable=not progress))
    return res

def chunk_ranges(total: int, num_chunks: int) -> List[range]:
    bounds = [total * i // num_chunks for i in range(num_chunks + 1)]
    return [range(bounds[i], bounds[i+1]) for i in range(num_chunks)]

def tree_reduce(values: Sequence[T], combine: Callable[[T, T], T]) -> T:
    if len(values) == 0:
        raise ValueError("cannot reduce an empty sequence")
    level = list(values)
    while len(level) > 1:
        nxt = [combine(level[i], level[i+1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]
