"""Shared strategies and adapters for the test suite."""

import numpy as np
from hypothesis import strategies as st

from fourier_marginals import core


@st.composite
def universes(draw, max_d=3, max_m=4, kinds=(core.CATEGORICAL,)):
    d = draw(st.integers(1, max_d))
    sizes = draw(st.lists(st.integers(2, max_m), min_size=d, max_size=d))
    kind_list = draw(st.lists(st.sampled_from(kinds), min_size=d, max_size=d))
    return core.build_universe(sizes, kind_list)


@st.composite
def set_families(draw, d, max_sets=3):
    subsets = []
    for r in range(1, d + 1):
        subsets.extend(_combinations(range(d), r))
    family = draw(st.lists(st.sampled_from(subsets), min_size=1,
                           max_size=min(max_sets, len(subsets)),
                           unique=True))
    return tuple(family)


def _combinations(pool, r):
    import itertools
    return list(itertools.combinations(pool, r))


@st.composite
def workloads(draw, max_d=3, max_m=4, max_sets=3, kind="marginal",
              positive=False):
    universe = draw(universes(max_d=max_d, max_m=max_m))
    sets = draw(set_families(universe.d, max_sets=max_sets))
    low = 0.1 if positive else 0.0
    weights = draw(st.lists(st.floats(low, 1.0, allow_nan=False),
                            min_size=len(sets), max_size=len(sets)))
    if sum(weights) == 0:
        weights[0] = 1.0
    return core.Workload(universe=universe, sets=sets,
                         weights=np.array(weights))


@st.composite
def datasets(draw, universe, max_rows=8):
    n = draw(st.integers(0, max_rows))
    rows = [[draw(st.integers(0, m - 1)) for m in universe.domain_sizes]
            for _ in range(n)]
    arr = np.array(rows, dtype=np.int64).reshape(n, universe.d)
    return core.Dataset(universe=universe, rows=arr)


def workload_primitives(workload):
    """Plain-value view of a workload for the reference module."""
    return {
        "sizes": workload.universe.domain_sizes,
        "sets": workload.sets,
        "weights": np.asarray(workload.weights),
        "attr_kinds": workload.universe.attribute_kind,
    }
