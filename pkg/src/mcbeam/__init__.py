"""mcbeam: multicell MISO beamforming with DQN-selected binary weights.

Kept import-light on purpose: the CLI entry point must be able to pin BLAS
thread counts before numpy loads. Import submodules directly, e.g.
``from mcbeam import beamform``.
"""

__version__ = "0.1.0"
