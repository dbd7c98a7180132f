"""Worker pool that evaluates independent sweep points."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

logger = logging.getLogger(__name__)

P = TypeVar("P")
R = TypeVar("R")


def run_sweep(
    points: Sequence[P],
    evaluate: Callable[[P], R],
    workers: int = 1,
    sort_key: Optional[Callable[[R], object]] = None,
) -> Tuple[List[R], Dict[str, int]]:
    """Evaluate every point; failed points are logged and left out of the results.

    Results come back sorted by ``sort_key`` (default: input order), so the
    output does not depend on completion order.
    """
    summary = {"processed": 0, "succeeded": 0, "failed": 0}
    if not points:
        return [], summary

    indexed: List[Tuple[int, R]] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {pool.submit(evaluate, point): index for index, point in enumerate(points)}
        for future in as_completed(futures):
            index = futures[future]
            try:
                indexed.append((index, future.result()))
                summary["succeeded"] += 1
            except Exception:
                logger.exception("Sweep point %s failed", points[index])
                summary["failed"] += 1
            finally:
                summary["processed"] += 1

    if sort_key is None:
        indexed.sort(key=lambda item: item[0])
    else:
        indexed.sort(key=lambda item: sort_key(item[1]))
    return [result for _, result in indexed], summary
