"""Occupancy measures q(s, a, s') of layered MDPs."""

from dataclasses import dataclass

import numpy as np

from src.mdp.model import (
    DERIVED_TOLERANCE,
    LayeredMdp,
    Policy,
    TransitionKernel,
    ValidationReport,
    frozen_array,
)


@dataclass(frozen=True)
class OccupancyMeasure:
    """Probability of traversing each triple (s, a, s') in one episode."""

    q: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", frozen_array(self.q))

    def state_action(self) -> np.ndarray:
        """Marginal q(s, a)."""
        return self.q.sum(axis=2)

    def layer_mass(self, mdp: LayeredMdp) -> np.ndarray:
        return np.array(
            [self.q[states].sum() for states in mdp.layer_arrays[:-1]]
        )

    def check(
        self, mdp: LayeredMdp, tolerance: float = DERIVED_TOLERANCE
    ) -> ValidationReport:
        """Per-layer unit mass and flow conservation at interior states."""
        violations = []
        for index, mass in enumerate(self.layer_mass(mdp)):
            if abs(mass - 1.0) > tolerance:
                violations.append(f"layer {index} carries mass {mass:.12g}")
        inflow = self.q.sum(axis=(0, 1))
        outflow = self.q.sum(axis=(1, 2))
        for layer in mdp.layers[1:-1]:
            for state in layer:
                if abs(inflow[state] - outflow[state]) > tolerance:
                    violations.append(
                        f"flow not conserved at {mdp.label(state)}: "
                        f"in {inflow[state]:.12g}, out {outflow[state]:.12g}"
                    )
        return ValidationReport(tuple(violations))


def occupancy_from(
    kernel: TransitionKernel, policy: Policy, mdp: LayeredMdp
) -> OccupancyMeasure:
    """Exact forward recursion of the occupancy measure, layer by layer.

    Undefined kernel or policy rows are allowed only where they receive no
    probability mass.
    """
    n_states, n_actions = mdp.n_states, mdp.n_actions
    if kernel.rows.shape != (n_states, n_actions, n_states):
        raise ValueError(
            f"kernel shape {kernel.rows.shape} does not match the MDP "
            f"({n_states}, {n_actions}, {n_states})"
        )
    if policy.probabilities.shape != (n_states, n_actions):
        raise ValueError(
            f"policy shape {policy.probabilities.shape} does not match "
            f"the MDP ({n_states}, {n_actions})"
        )

    probabilities = np.nan_to_num(policy.probabilities)
    rows = np.nan_to_num(kernel.rows)
    q = np.zeros((n_states, n_actions, n_states))
    reach = np.zeros(n_states)
    reach[mdp.initial_state] = 1.0

    for states in mdp.layer_arrays[:-1]:
        mass = reach[states]
        undefined_policy = (mass > 0.0) & ~policy.defined[states]
        if np.any(undefined_policy):
            raise ValueError(
                "policy is undefined at reachable state(s) "
                f"{states[undefined_policy].tolist()}"
            )
        weights = mass[:, None] * probabilities[states]
        undefined_rows = (weights > 0.0) & ~kernel.defined[states]
        if np.any(undefined_rows):
            pairs = np.argwhere(undefined_rows)
            raise ValueError(
                "kernel is undefined at reachable pair(s) "
                f"{[(int(states[i]), int(a)) for i, a in pairs]}"
            )
        q[states] = weights[:, :, None] * rows[states]
        reach = reach + q[states].sum(axis=(0, 1))

    return OccupancyMeasure(q)


def induce_kernel(occupancy: OccupancyMeasure) -> TransitionKernel:
    """P^q(s'|s,a) = q(s,a,s') / sum_s'' q(s,a,s'').

    Rows with zero mass stay undefined.
    """
    q = occupancy.q
    totals = occupancy.state_action()
    defined = totals > 0.0
    rows = np.full(q.shape, np.nan)
    rows[defined] = q[defined] / totals[defined][:, None]
    return TransitionKernel(rows, defined)


def induce_policy(occupancy: OccupancyMeasure) -> Policy:
    """pi^q(a|s) = sum_s' q(s,a,s') / sum_{a',s'} q(s,a',s')."""
    pair_mass = occupancy.state_action()
    state_mass = pair_mass.sum(axis=1)
    defined = state_mass > 0.0
    probabilities = np.full(pair_mass.shape, np.nan)
    probabilities[defined] = pair_mass[defined] / state_mass[defined][:, None]
    return Policy(probabilities, defined)


def expected_reward(occupancy: OccupancyMeasure, reward: np.ndarray) -> float:
    """Inner product <q, r> = sum q(s,a,s') r(s,a)."""
    reward = np.asarray(reward, dtype=float)
    if occupancy.q.shape[:2] != reward.shape:
        raise ValueError(
            f"reward shape {reward.shape} does not match occupancy "
            f"{occupancy.q.shape[:2]}"
        )
    return float(np.sum(occupancy.state_action() * reward))
