"""Numerical workbench for tame harmonic bundles on punctured disks.

Submodules: ``mats`` (positive-definite matrices), ``monodromy`` (exact
sl2 data and weight filtrations), ``model`` (model metrics and energies),
``flow`` (harmonic-map relaxation), ``higgs`` (Higgs fields and residues),
``kahler`` (discrete Kaehler identities), ``l2sheaf`` (L2 membership of
germs), ``dbar`` (weighted dbar solver) and ``cli``.
"""

from __future__ import annotations

__version__ = "0.1.0"
