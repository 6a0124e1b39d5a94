"""Media mix modeling: adstock/saturation transforms, ridge regression with
a gradient-free hyperparameter search, lift-study calibration, Pareto model
selection, budget allocation, and model refresh."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
