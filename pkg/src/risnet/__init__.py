"""risnet package.

Coverage and ergodic rate of RIS-assisted cellular networks, evaluated through
Laplace transforms of shot-noise fields and cross-checked by Monte Carlo.
"""

from __future__ import annotations

__all__: list[str] = []
