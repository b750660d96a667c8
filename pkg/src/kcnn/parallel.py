"""Tiny order-preserving thread pool helper."""

from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map ``fn`` over ``items``, preserving input order.

    Runs sequentially for ``threads <= 1``. Thread-based because the heavy
    work (BLAS, scipy.sparse) releases the GIL.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
