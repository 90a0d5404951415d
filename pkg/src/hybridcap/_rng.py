"""Seeded generator helpers.

Parallel work splits one integer seed into independent child streams with
``numpy.random.SeedSequence.spawn``; chunk ``k`` always receives child ``k``,
so results do not depend on how many workers consume the chunks.
"""

import numpy as np


def spawn_generators(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
