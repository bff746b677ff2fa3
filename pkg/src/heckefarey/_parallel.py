import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Workers allowed by HF_THREADS (0 or unset = one per CPU)."""
    raw = os.environ.get("HF_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("HF_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def ordered_map(fn, items):
    """Map ``fn`` over ``items``, results in input order regardless of worker count."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
