"""Maximal acceptability of static and dynamic portfolio problems.

Submodules: ``scenario`` (markets and trees), ``lp`` (simplex and bi-objective
LP), ``risk`` and ``acceptability`` (static measures and indices),
``bisection`` (maximization algorithm), ``market`` and ``dynrisk`` (strategies
and dynamic measures), ``recursive`` (constant maximal acceptability),
``frontier`` (dynamic mean-risk and mean-loss frontiers) and ``cli``.

The package namespace itself stays light so that ``ACCMAX_THREADS`` can take
effect before numpy is loaded by the command-line entry point.
"""

__version__ = "0.1.0"
