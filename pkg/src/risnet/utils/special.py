import logging

import numpy as np
from scipy import special

from risnet.exceptions import DomainError, NumericalError

logger = logging.getLogger(__name__)


def confluent_1f1(a: float, b: float, z: float) -> float:
    """Kummer's confluent hypergeometric function 1F1(a; b; z).

    For z < 0 the Kummer transformation 1F1(a; b; z) = e^z 1F1(b-a; b; -z)
    is applied first, so the series behind ``scipy.special.hyp1f1`` runs on a
    positive argument without cancellation.

    Raises:
        DomainError: b is zero or a negative integer
        NumericalError: the evaluation does not produce a finite value
    """
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"1F1 undefined for nonpositive integer b={b}")
    if z < 0:
        value = np.exp(z) * special.hyp1f1(b - a, b, -z)
    else:
        value = special.hyp1f1(a, b, z)
    if not np.isfinite(value):
        raise NumericalError(f"1F1({a}, {b}, {z}) did not converge", partial=value)
    return float(value)
