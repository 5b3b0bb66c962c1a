"""Vine-copula confidence and prediction intervals for trained regressors."""
__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
