"""
Bounded worker pool for independent trials and sweep rows
"""

from multiprocessing import Pool, cpu_count
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

from src.utils.logger import get_logger

logger = get_logger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def run_parallel(func: Callable[[T], R], tasks: Iterable[T], jobs: Optional[int] = 1) -> List[R]:
    """
    Apply a module-level function to every task, preserving task order.

    Args:
        func: Picklable callable
        tasks: Task arguments
        jobs: Worker processes; 1 or None runs in the calling process

    Returns:
        Results in task order
    """
    tasks = list(tasks)
    if not tasks:
        return []

    if jobs is None or jobs <= 1 or len(tasks) == 1:
        return [func(task) for task in tasks]

    num_processes = min(jobs, cpu_count(), len(tasks))
    logger.debug("worker_pool_start", processes=num_processes, tasks=len(tasks))
    with Pool(processes=num_processes) as pool:
        return pool.map(func, tasks)


def derive_seed(master: int, *path: int) -> int:
    """Deterministic 32-bit child seed for a task path below a master seed"""
    state = np.random.SeedSequence([int(master)] + [int(p) for p in path]).generate_state(1)
    return int(state[0])
