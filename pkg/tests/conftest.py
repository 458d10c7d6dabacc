import random
from fractions import Fraction

import pytest

from dquant.polyfields import GradedSpaceSpec, Polyvector, WeightTableHandle
from dquant.weights import WeightCache, weight_table

# Acceptance-grade sampling configuration: fixed so every run is
# bit-identical.
TABLE_SAMPLES = 4_000_000
TABLE_SEED = 3


def random_polyvector(space, arity, degree, rng, terms=3, allow_zero=False):
    D = space.total_dim
    data = {}
    for _ in range(terms):
        mono = [0] * D
        for _ in range(rng.randint(0, degree)):
            mono[rng.randrange(D)] += 1
        wedge = tuple(sorted(rng.sample(range(1, D + 1), arity)))
        data[(tuple(mono), wedge)] = Fraction(rng.randint(-3, 3))
    p = Polyvector(space, data)
    if p.is_zero() and not allow_zero:
        mono = tuple([1] + [0] * (D - 1))
        p = Polyvector(space, {(mono, tuple(range(1, arity + 1))): Fraction(1)})
    return p


@pytest.fixture(scope="session")
def weight_cache(tmp_path_factory):
    return WeightCache(tmp_path_factory.mktemp("weights") / "cache.tsv")


@pytest.fixture(scope="session")
def n4_table(weight_cache):
    return weight_table(4, TABLE_SAMPLES, TABLE_SEED, weight_cache)


@pytest.fixture(scope="session")
def n3_table(weight_cache):
    return weight_table(3, TABLE_SAMPLES, TABLE_SEED, weight_cache)


@pytest.fixture(scope="session")
def one_type_handle(n3_table, n4_table):
    handle = WeightTableHandle.exact_n2()
    handle = handle.merged(WeightTableHandle.from_estimates(n3_table))
    return handle.merged(WeightTableHandle.from_estimates(n4_table))
