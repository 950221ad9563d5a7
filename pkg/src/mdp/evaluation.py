"""Exact policy evaluation, trajectory sampling and l1 distances."""

import numpy as np

from src.mdp.model import LayeredMdp, Policy, TransitionKernel


def value_function(
    policy: Policy, kernel: TransitionKernel, mdp: LayeredMdp
) -> np.ndarray:
    """Backward policy evaluation; V(s_L) = 0.

    V(s) = sum_a pi(a|s) [r(s,a) + sum_s' P(s'|s,a) V(s')]
    """
    values = np.zeros(mdp.n_states)
    rows = np.nan_to_num(kernel.rows)
    probabilities = np.nan_to_num(policy.probabilities)
    for states in reversed(mdp.layer_arrays[:-1]):
        backups = mdp.reward[states] + rows[states] @ values
        values[states] = (probabilities[states] * backups).sum(axis=1)
    return values


def _draw(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    cumulative = np.cumsum(probabilities)
    # Scaling by the total keeps the draw on a positive-mass entry.
    target = rng.random() * cumulative[-1]
    return int(np.searchsorted(cumulative, target, side="right"))


def sample_trajectory(
    kernel: TransitionKernel,
    policy: Policy,
    mdp: LayeredMdp,
    rng: np.random.Generator,
) -> list[tuple[int, int, int]]:
    """Sample one episode from s_0 to s_L as (s, a, s') triples.

    Deterministic policies consume one uniform draw per step; stochastic
    policies consume two.
    """
    state = mdp.initial_state
    deterministic = policy.is_deterministic
    actions = policy.actions
    trajectory = []
    for _ in range(mdp.horizon):
        if deterministic:
            action = int(actions[state])
        else:
            action = _draw(policy.probabilities[state], rng)
        next_state = _draw(kernel.rows[state, action], rng)
        trajectory.append((state, action, next_state))
        state = next_state
    return trajectory


def l1_distance(p, p_prime) -> float:
    """sum_i |p_i - p'_i|."""
    p = np.asarray(p, dtype=float)
    p_prime = np.asarray(p_prime, dtype=float)
    if p.shape != p_prime.shape:
        raise ValueError(
            f"cannot compare vectors of shapes {p.shape} and {p_prime.shape}"
        )
    return float(np.abs(p - p_prime).sum())
