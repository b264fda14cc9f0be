"""Trial seeding and a scheduling-independent parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

T = TypeVar("T")


def trial_seed(rng_seed: int, trial: int) -> int:
    """Independent 64-bit sub-seed for trial ``trial``; depends on nothing else."""
    ss = np.random.SeedSequence([int(rng_seed) & ((1 << 64) - 1), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def thread_count(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get("EQM_THREADS", "1") or 1)
    return max(1, int(threads))


def run_trials(fn: Callable[[int], T], trials: int, threads: Optional[int] = None) -> List[T]:
    """``[fn(0), ..., fn(trials - 1)]``, optionally evaluated on a thread pool.

    Results come back in trial order, so any aggregation over them is
    independent of the schedule.
    """
    n = thread_count(threads)
    if n == 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, range(trials)))
