"""Regression barriers and standard packet cases shared by tests, the CLI
``validate`` command and the acceptance gate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import PotentialSpec, is_symmetric, make_spec

SUPPORT = (-1.0, 1.0)
CORPUS_K = np.linspace(0.1, 3.0, 200)


def random_multisegment(seed: int, n_segments: int = 4, support=SUPPORT,
                        heights=(-1.0, 4.0)) -> PotentialSpec:
    """Seeded asymmetric staircase tiling the support."""
    rng = np.random.default_rng(seed)
    x1, x2 = support
    cuts = np.sort(rng.uniform(x1, x2, n_segments - 1))
    edges = np.concatenate([[x1], cuts, [x2]])
    h = rng.uniform(*heights, n_segments)
    return make_spec([(a, b, v) for a, b, v in zip(edges, edges[1:], h)], support=support)


def corpus() -> dict[str, PotentialSpec]:
    """The ten regression barriers, all on ``[-1, 1]``.

    Keeping the width at 2 guarantees ``k <= 2 pi / d`` over the whole corpus
    k-grid, the regime in which a node of ``Psi_ref`` within ``2 pi / k`` of
    the midpoint is certain.
    """
    return {
        "free": make_spec(),
        "delta": make_spec(deltas=[(0.0, 2.0)]),
        "double_delta": make_spec(deltas=[(-0.5, 1.5), (0.5, 1.5)]),
        "rect": make_spec([(-1.0, 1.0, 2.0)]),
        "double_rect": make_spec([(-1.0, -0.4, 3.0), (0.4, 1.0, 3.0)]),
        "random_1": random_multisegment(1, 3),
        "random_2": random_multisegment(2, 4),
        "random_3": random_multisegment(3, 5),
        "hybrid_1": make_spec([(-1.0, 0.2, 2.5)], [(0.6, 1.0)]),
        "hybrid_2": make_spec([(-0.5, 1.0, 1.5)], [(-0.8, 2.0)]),
    }


def symmetric_names() -> list[str]:
    return [n for n, s in corpus().items() if is_symmetric(s)[0]]


def asymmetric_names() -> list[str]:
    return [n for n, s in corpus().items() if not is_symmetric(s)[0]]


@dataclass(frozen=True)
class PacketCase:
    name: str
    spec: PotentialSpec
    k0: float
    l: float
    L: float
    t_grid: np.ndarray


def standard_cases() -> dict[str, PacketCase]:
    """One symmetric and one asymmetric packet scenario.

    Both start eight widths clear of the barrier and end in the outgoing
    asymptotic epoch. The asymmetric band stays away from the sign change of
    ``mu`` near ``k = 1.98`` so the reflection amplitude is smooth across it.
    """
    return {
        "symmetric": PacketCase("symmetric", make_spec([(-1.0, 1.0, 4.0)]),
                                2.0, 10.0, 60.0, np.linspace(0.0, 40.0, 81)),
        "asymmetric": PacketCase("asymmetric", make_spec([(-1.0, 0.0, 3.0), (0.0, 1.0, 1.0)]),
                                 1.3, 14.0, 70.0, np.linspace(0.0, 70.0, 141)),
    }
