"""Closed-form regret and sample-complexity bounds.

The formulas are stated for rewards in [0, 1]; ``r_max`` lifts them to the
reward scale of the instance. Every calculator returns ``None`` when its
bound is unavailable (infinite gamma, degenerate h).
"""

import math
from typing import Optional

import numpy as np


def _log_term(num_layers: int, episodes: int, delta: float) -> float:
    return math.log(3.0 * num_layers * max(episodes, 1) / delta)


def theoretical_regret_bound(
    num_layers: int,
    gamma: float,
    n_states: int,
    n_actions: int,
    episodes: int,
    delta: float,
    r_max: float = 1.0,
) -> Optional[np.ndarray]:
    """r_max L^2 gamma sqrt(4 t |S| |A| ln(3 L T / delta)) for t = 1..T."""
    if math.isinf(gamma) or math.isnan(gamma):
        return None
    t = np.arange(1, episodes + 1, dtype=float)
    scale = r_max * num_layers**2 * gamma
    log_term = _log_term(num_layers, episodes, delta)
    return scale * np.sqrt(4.0 * t * n_states * n_actions * log_term)


def finite_sample_threshold(
    num_layers: int,
    gamma: float,
    n_states: int,
    n_actions: int,
    episodes: int,
    delta: float,
    epsilon: float,
    r_max: float = 1.0,
) -> Optional[int]:
    """Smallest t with t >= 4 L^4 gamma^2 |S| |A| ln(3 L T / delta) / eps^2.

    ``epsilon`` is in reward units and is divided by ``r_max`` first.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if math.isinf(gamma) or math.isnan(gamma):
        return None
    unit_epsilon = epsilon / r_max
    bound = (
        4.0
        * num_layers**4
        * gamma**2
        * n_states
        * n_actions
        * _log_term(num_layers, episodes, delta)
        / unit_epsilon**2
    )
    return max(1, math.ceil(bound))


def convergence_threshold(
    n_states: int,
    n_actions: int,
    num_layers: int,
    episodes: int,
    delta: float,
    h: float,
) -> Optional[int]:
    """ceil(8 |S|^2 |A| ln(3 L T / delta) / h); 1 when nothing competes."""
    if math.isinf(h):
        return 1
    if h <= 0.0 or math.isnan(h):
        return None
    bound = (
        8.0
        * n_states**2
        * n_actions
        * _log_term(num_layers, episodes, delta)
        / h
    )
    return max(1, math.ceil(bound))
