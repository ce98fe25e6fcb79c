"""Numerical toolkit for the mixed Brownian plus weighted stable process.

Modules
-------
kernels   normalization constants, jump intensities, Levy exponents
fraclap   truncated fractional Laplacian on power functions and fields
geometry  the domain zoo, boundary charts and chart boxes
samplers  exact increments, truncated-process paths, potential density
exit_mc   exit-time and exit-target estimators
harness   experiments producing graded reports
cli       the ``jumpbhp`` command
"""

__version__ = "0.1.0"

from .errors import AccuracyError, BudgetError, GeometryError, ParameterError, SingularityError
from .kernels import Params

__all__ = ["Params", "AccuracyError", "BudgetError", "GeometryError", "ParameterError", "SingularityError",
           "__version__"]
