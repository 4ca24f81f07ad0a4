import numpy as np
import pytest

from upbkit import CanonicalAngles, build_canonical
from upbkit.filtering import LocalFilter, SeparableSuperoperator


def random_state(rng, d=2):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_local_filter(rng):
    factors = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3)]
    return LocalFilter.from_raw(factors)


def random_separable(rng, max_filters=16):
    n = int(rng.integers(1, max_filters + 1))
    filters = [random_local_filter(rng) for _ in range(n)]
    scales = rng.uniform(0.2, 1.0, n)
    return SeparableSuperoperator.from_filters(filters, scales)


@pytest.fixture(scope="session")
def shifts_class_upb():
    return build_canonical(CanonicalAngles(np.pi / 2, np.pi / 2, np.pi / 2))


@pytest.fixture(scope="session")
def third_class_upb():
    return build_canonical(CanonicalAngles(np.pi / 3, np.pi / 3, np.pi / 3))
