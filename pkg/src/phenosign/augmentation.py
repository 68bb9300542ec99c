"""Stochastic multi-view graph augmentation and sign splitting.

Four views feed the contrastive stage: two independent maskings of the
original graph and two of the diffusion graph.  Each view is then split into
a positive-only and a negative-only subgraph over the full node universe.
Everything is a pure function of (graphs, rate, rng_seed): view k draws its
randomness from the spawned stream SeedSequence(rng_seed, spawn_key=(k,)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .validation import check_fraction, check_seed

AUGMENTATION_MODES = ("drop", "flip")
NUM_VIEWS = 4


@dataclass(frozen=True)
class ViewSet:
    views: tuple  # 4 SignedBipartiteGraph values: 2 from the original, 2 from the diffusion graph
    splits: tuple  # per view: (positive-only subgraph, negative-only subgraph)
    rng_seed: int


def sign_split(graph):
    """(positive-edge subgraph, negative-edge subgraph) over the same nodes."""
    gi, pi, sg, wt = graph.edge_arrays
    pos = sg > 0
    return (
        graph.with_edges(gi[pos], pi[pos], sg[pos], wt[pos]),
        graph.with_edges(gi[~pos], pi[~pos], sg[~pos], wt[~pos]),
    )


def _augment(graph, rate, seed_sequence, mode):
    gi, pi, sg, wt = graph.edge_arrays
    draws = np.random.default_rng(seed_sequence).random(len(gi))
    hit = draws < rate
    if mode == "drop":
        keep = ~hit
        return graph.with_edges(gi[keep], pi[keep], sg[keep], wt[keep])
    if mode == "flip":
        flipped = np.where(hit, -sg, sg)
        return graph.with_edges(gi, pi, flipped, wt)
    raise ConfigError(f"unknown augmentation mode {mode!r} (expected one of {AUGMENTATION_MODES})")


def mask_edges(graph, drop_rate, rng_seed):
    """Independently delete each edge with probability drop_rate."""
    check_fraction(drop_rate, "drop_rate")
    return _augment(graph, drop_rate, np.random.SeedSequence(check_seed(rng_seed)), "drop")


def flip_edge_signs(graph, flip_rate, rng_seed):
    """Independently flip each edge's sign with probability flip_rate.

    Alternative augmentation used by the ablation protocol; same masking
    machinery as mask_edges but perturbs signs instead of deleting edges.
    """
    check_fraction(flip_rate, "flip_rate")
    return _augment(graph, flip_rate, np.random.SeedSequence(check_seed(rng_seed)), "flip")


def build_views(original, diffusion, rate, rng_seed, mode="drop"):
    """Build the four augmented views and their sign splits.

    Views 0-1 perturb `original`, views 2-3 perturb `diffusion`, each with its
    own spawned sub-seed so repeated calls with the same rng_seed are
    bit-identical while the two maskings of one graph stay independent.
    """
    check_fraction(rate, "rate")
    rng_seed = check_seed(rng_seed)
    if mode not in AUGMENTATION_MODES:
        raise ConfigError(f"unknown augmentation mode {mode!r} (expected one of {AUGMENTATION_MODES})")
    if not original.same_node_universe(diffusion):
        raise ValueError("original and diffusion graphs must share the node universe")
    views = []
    for k in range(NUM_VIEWS):
        source = original if k < 2 else diffusion
        ss = np.random.SeedSequence(entropy=rng_seed, spawn_key=(k,))
        views.append(_augment(source, rate, ss, mode))
    return ViewSet(
        views=tuple(views),
        splits=tuple(sign_split(v) for v in views),
        rng_seed=rng_seed,
    )
