"""renderproof: render static scenes three ways and score the results with IQA metrics."""
import os

__version__ = "0.1.0"


def _configure_threads() -> None:
    # numba reads NUMBA_NUM_THREADS once, at import; it is the ceiling for set_num_threads
    value = os.environ.get("RENDERPROOF_THREADS")
    if not value:
        return
    try:
        n = int(value)
    except ValueError:
        return
    if n >= 1 and "NUMBA_NUM_THREADS" not in os.environ:
        os.environ["NUMBA_NUM_THREADS"] = str(max(n, os.cpu_count() or 1))


_configure_threads()
# the system TBB is too old for numba and warns on every run; prefer OpenMP
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")


def apply_thread_limit() -> None:
    """Cap numba worker threads at RENDERPROOF_THREADS, if set. Results do not change."""
    value = os.environ.get("RENDERPROOF_THREADS")
    if not value:
        return
    n = int(value)
    if n < 1:
        raise ValueError("RENDERPROOF_THREADS must be a positive integer")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
