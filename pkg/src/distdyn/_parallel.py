"""Ordered map over a process pool; serial when ``workers <= 1``."""

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, workers=1, chunksize=1):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
