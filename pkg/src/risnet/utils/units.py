import re

import numpy as np
from scipy import constants

_DB_PATTERN = re.compile(r"^\s*([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*dB\s*$")


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    return float(10.0 * np.log10(value))


def parse_power(value: float | int | str) -> float:
    """Linear power factor from a number or a string such as ``"-3dB"``"""
    if isinstance(value, str):
        match = _DB_PATTERN.match(value)
        if match is None:
            try:
                return float(value)
            except ValueError:
                raise ValueError(
                    f"'{value}' is neither a number nor a value with a 'dB' suffix"
                ) from None
        return db_to_linear(float(match.group(1)))
    return float(value)


def free_space_beta(f_c: float, squared: bool = True) -> float:
    """Reference gain at 1 m, (c / (4 pi f_c))**2 for the power convention"""
    if f_c <= 0:
        raise ValueError("carrier frequency must be positive")
    amplitude = constants.c / (4.0 * np.pi * f_c)
    return float(amplitude**2 if squared else amplitude)
