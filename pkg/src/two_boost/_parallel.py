"""Ordered parallel map capped by the TWO_BOOST_THREADS environment variable."""
import os
from concurrent.futures import ThreadPoolExecutor


def n_threads() -> int:
    try:
        n = int(os.environ.get("TWO_BOOST_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def pmap(fn, items):
    """Map fn over items, results in input order."""
    items = list(items)
    nt = min(n_threads(), len(items))
    if nt <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(nt) as ex:
        return list(ex.map(fn, items))
