"""Entry point that pins BLAS thread counts before numpy loads.

Reproducibility depends on a fixed number of BLAS threads, so ``--threads``
must take effect before the first numpy import; everything heavier is
imported lazily inside ``entry``.
"""

import os
import sys


def _peek_threads(argv):
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            try:
                return max(1, int(argv[i + 1]))
            except ValueError:
                return 1
        if arg.startswith("--threads="):
            try:
                return max(1, int(arg.split("=", 1)[1]))
            except ValueError:
                return 1
    return 1


def entry(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    threads = _peek_threads(argv)
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, str(threads))
    from mcbeam.expcli import main

    return main(argv)


if __name__ == "__main__":
    raise SystemExit(entry())
