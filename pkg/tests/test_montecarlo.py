import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kaclab.bounds import admissible_constants
from kaclab.model import Cauchy, Gaussian, ModelParams, ParetoSymmetric, TailProfile
from kaclab.montecarlo import (EmpiricalMeasure, empirical_cf, explosion_curve, interval_mass,
                               sample_path, sample_velocity, symmetry_gap, tail_masses)
from kaclab.stable import kolmogorov_distance

P1 = ModelParams(1.0)


def test_count_closedness():
    em = EmpiricalMeasure.from_unsorted([3.0, -1.0, 1.0, 1.0, 2.0])
    assert em.count(1.0, 2.0) == 3
    assert em.count(1.0, 2.0, (False, True)) == 1
    assert em.count(1.0, 2.0, (True, False)) == 2
    assert em.count(5.0, 6.0) == 0
    assert em.cdf(1.0) == 0.6 and em.cdf_left(1.0) == 0.2


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(1e-9, 1e6))
def test_tail_masses_partition(values, a):
    em = EmpiricalMeasure.from_unsorted(values)
    (b, _), (c, _), (u, _) = tail_masses(em, a)
    assert b + c + u == pytest.approx(1.0, abs=1e-12)
    m, s = interval_mass(em, -a, a)
    assert 0 <= m <= 1 and s >= 0


def test_mass_argument_errors():
    em = EmpiricalMeasure.from_unsorted([0.0])
    with pytest.raises(ValueError):
        interval_mass(em, 1.0, 0.0)
    with pytest.raises(ValueError):
        tail_masses(em, 0.0)


def test_symmetry_gap_balanced():
    em = EmpiricalMeasure.from_unsorted([-3.0, -2.0, 0.0, 2.0, 3.0])
    d, s = symmetry_gap(em, 2.0)
    assert d == 0.0 and s > 0


def test_time_zero_is_initial_law():
    em = sample_velocity(0.0, Cauchy(), P1, 50_000, seed=3)
    assert kolmogorov_distance(em, Cauchy().cdf) < 1.63 / math.sqrt(50_000) * 1.5
    cf = empirical_cf(em, np.array([0.0, 0.5, 1.0]))
    assert cf.phi[0] == 1.0
    assert np.all(np.abs(cf.phi - np.exp(-cf.xi)) < 4 * cf.sigma + 1e-12)


def test_tree_and_branching_agree():
    law = ParetoSymmetric(0.5)
    a = sample_velocity(2.0, law, P1, 40_000, seed=1, method="tree")
    b = sample_velocity(2.0, law, P1, 40_000, seed=2, method="branching")
    # two-sample KS at level 1e-3: c(a) sqrt(2/n)
    assert kolmogorov_distance(a, b) < 1.95 * math.sqrt(2 / 40_000)


def test_elastic_gaussian_is_stationary():
    em = sample_velocity(3.0, Gaussian(1.0), ModelParams(0.0), 40_000, seed=4, method="tree")
    assert kolmogorov_distance(em, Gaussian(1.0).cdf) < 1.95 / math.sqrt(40_000)


def test_sampling_independent_of_threads():
    law = ParetoSymmetric(0.5)
    a = sample_path([1.0, 3.0], law, P1, 5000, seed=9, chunk_size=700, threads=1)
    b = sample_path([1.0, 3.0], law, P1, 5000, seed=9, chunk_size=700, threads=3)
    for x, y in zip(a, b):
        assert np.array_equal(x.samples, y.samples)
    c = sample_velocity(1.0, law, P1, 3000, seed=9, chunk_size=500, threads=2, method="tree")
    d = sample_velocity(1.0, law, P1, 3000, seed=9, chunk_size=500, threads=1, method="tree")
    assert np.array_equal(c.samples, d.samples)


def test_sampling_errors():
    with pytest.raises(ValueError):
        sample_velocity(-1.0, Cauchy(), P1, 10)
    with pytest.raises(ValueError):
        sample_velocity(1.0, Cauchy(), P1, 10, method="other")
    with pytest.raises(ValueError):
        sample_path([2.0, 1.0], Cauchy(), P1, 10)


def test_explosion_curve_rows():
    law = ParetoSymmetric(0.5)
    prof = TailProfile(1.0, 2.0, 0.5)
    sched = admissible_constants(P1).schedule()
    rows = explosion_curve([0.0, 2.0], law, P1, prof, sched, 5000, seed=1)
    assert [r.t for r in rows] == [0.0, 2.0]
    assert all(r.available and r.n == 5000 for r in rows)
    for r in rows:
        assert r.below + r.central + r.above == pytest.approx(1.0)
    bare = explosion_curve([1.0], law, P1, prof, None, 1000, seed=1)
    assert bare[0].m == 0 and math.isnan(bare[0].x) and 0 <= bare[0].window <= 1
