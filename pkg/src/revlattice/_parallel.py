import os
from concurrent.futures import ProcessPoolExecutor


def max_workers():
    return os.cpu_count() or 1


def ordered_map(func, items, workers=1):
    """``list(map(func, items))``, optionally in worker processes.

    Results come back in input order, so any reduction over them is
    independent of the worker count.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


def chunked(seq, size):
    seq = list(seq)
    return [seq[i:i + size] for i in range(0, len(seq), size)]
