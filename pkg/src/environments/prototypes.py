"""GridWorld prototype families, their structural constants, and the
line-oriented environment description written next to every sweep.
"""

import logging
import math
from typing import Optional

import numpy as np

from src.environments.family import PrototypeFamily
from src.environments.gridworld import (
    DEFAULT_HEIGHT,
    DEFAULT_REWARD_CELLS,
    DEFAULT_WIDTH,
    N_ACTIONS,
    GridWorldSpec,
    build_gridworld,
    prototype_fragments,
)
from src.mdp.model import ROW_TOLERANCE, LayeredMdp

FIXED_GAP = "fixed-gap"
RANDOM = "random"
MODES = (FIXED_GAP, RANDOM)

logger = logging.getLogger(__name__)


def _family_from_probs(
    probs: np.ndarray, true_index: tuple, width: int, height: int
) -> PrototypeFamily:
    return PrototypeFamily(
        fragments=prototype_fragments(probs, width, height),
        true_index=true_index,
        success_probs=probs,
    )


def _draw_layers(draw, n_prototypes, rng, n_layers, shared):
    probs = np.empty((n_layers, n_prototypes, N_ACTIONS))
    true_index = []
    for layer in range(1 if shared else n_layers):
        probs[layer] = draw(rng)
        true_index.append(int(rng.integers(n_prototypes)))
    if shared:
        probs[1:] = probs[0]
        true_index = true_index * n_layers
    return probs, tuple(true_index)


def generate_fixed_gap_prototypes(
    n_prototypes: int,
    gap: float,
    rng: np.random.Generator,
    *,
    shared: bool = True,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> PrototypeFamily:
    """Prototypes whose success probabilities form an arithmetic progression.

    For each action an offset is drawn from U[0, 1 - (K-1) g] and prototype
    k uses ``offset + k * g`` at every state. With ``shared`` one draw (and
    one true index) serves every layer.
    """
    if n_prototypes < 1:
        raise ValueError(f"need at least one prototype, got {n_prototypes}")
    if gap < 0.0 or (n_prototypes - 1) * gap > 1.0:
        raise ValueError(
            f"gap {gap} does not fit {n_prototypes} prototypes in [0, 1]"
        )
    span = (n_prototypes - 1) * gap
    steps = np.arange(n_prototypes) * gap

    def draw(generator):
        z = np.empty((n_prototypes, N_ACTIONS))
        for action in range(N_ACTIONS):
            offset = generator.uniform(0.0, 1.0 - span)
            z[:, action] = np.minimum(offset + steps, 1.0)
        return z

    probs, true_index = _draw_layers(
        draw, n_prototypes, rng, width + height - 2, shared
    )
    return _family_from_probs(probs, true_index, width, height)


def generate_random_prototypes(
    n_prototypes: int,
    rng: np.random.Generator,
    *,
    shared: bool = True,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> PrototypeFamily:
    """Prototypes with independent U[0, 1] success probabilities."""
    if n_prototypes < 1:
        raise ValueError(f"need at least one prototype, got {n_prototypes}")

    def draw(generator):
        return generator.uniform(0.0, 1.0, size=(n_prototypes, N_ACTIONS))

    probs, true_index = _draw_layers(
        draw, n_prototypes, rng, width + height - 2, shared
    )
    return _family_from_probs(probs, true_index, width, height)


def gridworld_instance(
    mode: str,
    n_prototypes: int,
    rng: np.random.Generator,
    *,
    gap: float = 0.2,
    shared: bool = True,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    reward_cells: tuple = DEFAULT_REWARD_CELLS,
) -> tuple[GridWorldSpec, LayeredMdp, PrototypeFamily]:
    """Draw a family and build the GridWorld that uses its true prototypes."""
    if mode == FIXED_GAP:
        family = generate_fixed_gap_prototypes(
            n_prototypes, gap, rng, shared=shared, width=width, height=height
        )
    elif mode == RANDOM:
        family = generate_random_prototypes(
            n_prototypes, rng, shared=shared, width=width, height=height
        )
    else:
        raise ValueError(f"unknown prototype mode {mode!r}")
    spec = GridWorldSpec(
        success_probs=family.success_probs,
        true_index=family.true_index,
        width=width,
        height=height,
        reward_cells=reward_cells,
        mode=mode,
    )
    return spec, build_gridworld(spec), family


def _truth_gaps(family: PrototypeFamily, mdp: LayeredMdp, layer: int):
    """l1 gaps to the true prototype on informative pairs, shape (K, m)."""
    truth = family.true_index[layer]
    if truth is None:
        return None, None
    states = mdp.layer_arrays[layer]
    mask = family.informative_mask[states]
    if not mask.any():
        return truth, None
    fragment = family.fragments[layer][:, states]
    gaps = np.abs(fragment - fragment[truth]).sum(axis=3)
    return truth, gaps[:, mask]


def compute_gamma(family: PrototypeFamily, mdp: LayeredMdp) -> float:
    """Structural constant gamma over informative pairs.

    Per layer and wrong prototype: largest gap to the truth divided by the
    smallest nonzero gap. Infinite when a prototype agrees with the truth at
    one pair but not at another; 1.0 when there is nothing to compare.
    """
    gamma = 1.0
    for layer in range(family.num_layers):
        truth, gaps = _truth_gaps(family, mdp, layer)
        if gaps is None:
            continue
        for k in range(gaps.shape[0]):
            if k == truth:
                continue
            zero = gaps[k] <= ROW_TOLERANCE
            if zero.all():
                continue
            if zero.any():
                logger.warning(
                    "Prototype %d matches the truth only partly in layer %d;"
                    " gamma is unbounded.",
                    k,
                    layer,
                )
                return math.inf
            gamma = max(gamma, float(gaps[k].max() / gaps[k].min()))
    return gamma


def compute_h(family: PrototypeFamily, mdp: LayeredMdp) -> float:
    """Smallest l1 gap between the truth and any wrong prototype.

    Infinite when no layer has a competitor; 0.0 flags a degenerate family.
    """
    h = math.inf
    for layer in range(family.num_layers):
        truth, gaps = _truth_gaps(family, mdp, layer)
        if gaps is None:
            continue
        wrong = np.delete(gaps, truth, axis=0)
        if wrong.size:
            h = min(h, float(wrong.min()))
    if math.isinf(h):
        logger.info("No competing prototype in any layer; h is undefined.")
    elif h <= ROW_TOLERANCE:
        logger.warning("A wrong prototype coincides with the truth (h = 0).")
        h = 0.0
    return h


def describe_environment(spec: GridWorldSpec, seed: Optional[int]) -> str:
    """Line-oriented description from which the instance can be rebuilt."""
    lines = [
        f"grid = {spec.width}x{spec.height}",
        f"mode = {spec.mode}",
        f"seed = {'' if seed is None else seed}",
    ]
    for (x1, x2), value in spec.reward_cells:
        lines.append(f"reward = {x1} {x2} {value!r}")
    lines.append(
        "true_index = " + " ".join(str(k) for k in spec.true_index)
    )
    probs = spec.success_probs
    for layer in range(probs.shape[0]):
        for k in range(probs.shape[1]):
            values = " ".join(repr(float(z)) for z in probs[layer, k])
            lines.append(f"prototype = {layer} {k} {values}")
    return "\n".join(lines) + "\n"


def parse_environment(text: str) -> tuple[GridWorldSpec, Optional[int]]:
    """Inverse of ``describe_environment``."""
    width = height = None
    mode = FIXED_GAP
    seed = None
    rewards = []
    true_index = ()
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ValueError(f"line {number}: expected 'key = value'")
        fields = value.split()
        try:
            if key == "grid":
                width, height = (int(v) for v in value.split("x"))
            elif key == "mode":
                mode = value
            elif key == "seed":
                seed = int(value) if value else None
            elif key == "reward":
                rewards.append(
                    ((int(fields[0]), int(fields[1])), float(fields[2]))
                )
            elif key == "true_index":
                true_index = tuple(int(v) for v in fields)
            elif key == "prototype":
                layer, k = int(fields[0]), int(fields[1])
                entries[(layer, k)] = [float(v) for v in fields[2:]]
            else:
                raise ValueError(f"unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {number}: {exc}") from exc
    if width is None or not entries:
        raise ValueError("description lacks grid or prototype lines")
    n_layers = max(layer for layer, _ in entries) + 1
    n_prototypes = max(k for _, k in entries) + 1
    probs = np.empty((n_layers, n_prototypes, N_ACTIONS))
    for (layer, k), values in entries.items():
        probs[layer, k] = values
    spec = GridWorldSpec(
        success_probs=probs,
        true_index=true_index,
        width=width,
        height=height,
        reward_cells=tuple(rewards),
        mode=mode,
    )
    return spec, seed
