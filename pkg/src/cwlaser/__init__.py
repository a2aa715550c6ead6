"""Laser-method analysis of the fourth power of the Coppersmith-Winograd tensor.

The package has three layers:

* an exact symbolic layer (:mod:`cwlaser.forms`) that builds the CW tensor
  F_q, its powers, the block decomposition by index type, and recognizes
  matrix-multiplication tensors structurally;
* a feasibility layer (:mod:`cwlaser.params`, :mod:`cwlaser.value`) that
  represents the full parameter vector of the bound theorem, checks every
  constraint with explicit residuals, and maps feasible points to upper
  bounds omega(k) <= nu;
* a search layer (:mod:`cwlaser.optimize`) that optimizes the parameters
  numerically and emits independently re-checkable bound certificates.

Exact combinatorial oracles backing the asymptotic counting arguments live
in :mod:`cwlaser.counts`; the command line lives in :mod:`cwlaser.cli`.
"""

__version__ = "0.1.0"
