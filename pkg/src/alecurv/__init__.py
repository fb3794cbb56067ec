"""Curvature workbench for explicit asymptotically locally Euclidean metrics.

Modules
-------
tensor_core
    Dense tensors, symmetry classes and the algebraic curvature operations.
metric_zoo
    Explicit metric charts with exact third-order jets.
curvature_engine
    Curvature tensors and covariant derivatives from metric jets.
inequality_lab
    Directional-derivative inequalities as constrained eigenproblems.
analysis_lab
    Decay fits, the Pohozaev identity, the comparison ODE and volume growth.
cli
    Command-line front end (``alecurv``).
"""

__version__ = "0.1.0"

from . import analysis_lab, curvature_engine, inequality_lab, metric_zoo, tensor_core  # noqa: E402,F401
