"""Seeded simulators for two translation-invariant site percolations on Z^2.

* :mod:`percforks.ust` builds the scaled spanning-tree picture and its
  finite-energy perturbation;
* :mod:`percforks.gridforks` samples the Random Forks hierarchy;
* :mod:`percforks.roads` and :mod:`percforks.percolate` provide the crossing
  geometry and i.i.d. percolation machinery used to probe both.
"""

__version__ = "0.1.0"

from percforks._accel import USE_NUMBA
from percforks.lattice import (BondConfig, Box, ClusterLabeling, SiteConfig, export_bitmap,
                               import_bitmap, label_bond_clusters, label_clusters, translate)

__all__ = [
    "USE_NUMBA", "BondConfig", "Box", "ClusterLabeling", "SiteConfig", "export_bitmap",
    "import_bitmap", "label_bond_clusters", "label_clusters", "translate", "__version__",
]
