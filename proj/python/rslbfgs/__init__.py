"""Riemannian stochastic variance-reduced optimization.

Thin python surface over the C++ core: experiment presets, dataset
generation, runs, diagnostics, exports, and the two ground-truth solvers
(Karcher mean of SPD matrices, leading eigenpair of a data matrix).
"""

from ._core import (
    __version__,
    diagnose_bundle,
    diagnose_dataset,
    export_bundle,
    generate,
    karcher_mean,
    preset,
    preset_names,
    run,
    top_eigenpair,
)

__all__ = [
    "__version__",
    "diagnose_bundle",
    "diagnose_dataset",
    "export_bundle",
    "generate",
    "karcher_mean",
    "preset",
    "preset_names",
    "run",
    "top_eigenpair",
]
