"""Classical ensembles in scratched potentials.

Builds, for a quantum system H = p^2/2m + U(q), a classical ensemble moving
in a potential modified only along measure-zero curves ("scratches") whose
region-occupation statistics reproduce the quantum position and momentum
probabilities within an explicit bound.
"""

from scratchsim.grid import (
    Box,
    ComplexField,
    RegionPartition,
    ScalarField,
    SpatialGrid,
    fourier_forward,
    fourier_inverse,
    integrate,
    integrate_region,
    read_field,
    write_field,
)
from scratchsim.diophantine import (
    ApproximationProblem,
    RationalApproximation,
    solve,
    verify,
)

__all__ = [
    "Box",
    "ComplexField",
    "RegionPartition",
    "ScalarField",
    "SpatialGrid",
    "fourier_forward",
    "fourier_inverse",
    "integrate",
    "integrate_region",
    "read_field",
    "write_field",
    "ApproximationProblem",
    "RationalApproximation",
    "solve",
    "verify",
]

__version__ = "0.1.0"
