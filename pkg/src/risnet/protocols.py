from typing import Protocol

import numpy as np


class BilateralTransform(Protocol):
    """Bilateral Laplace transform evaluated on an array of complex arguments"""

    def __call__(self, s: np.ndarray) -> np.ndarray:
        """Return B(s) elementwise"""
        ...


class CharacteristicFunction(Protocol):
    """Characteristic function E[exp(iuX)] evaluated on an array of real u"""

    def __call__(self, u: np.ndarray) -> np.ndarray: ...


class PowerSampler(Protocol):
    """Draws n independent realizations of a nonnegative power"""

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray: ...


class VectorIntegrand(Protocol):
    """Integrand mapping nodes of shape (n,) to values of shape (n,) or (n, m)"""

    def __call__(self, x: np.ndarray) -> np.ndarray: ...
