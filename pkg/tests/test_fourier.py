import math

import numpy as np
import pytest

from kaclab.fourier import (CFGrid, InstabilityError, cf_from_trees, cf_grid, collision_operator,
                            evolve_cf, limit_check)
from kaclab.model import Cauchy, Gaussian, ModelParams, ParetoSymmetric, PointMass
from kaclab.stable import StableLaw

P1 = ModelParams(1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        CFGrid([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        CFGrid([1.0, 0.5], [1.0, 1.0])


def test_collision_fixes_stable_laws():
    g = cf_grid(Cauchy(), 8.0, 513)
    assert np.max(np.abs(collision_operator(g, P1).phi - g.phi)) < 1e-12
    g0 = cf_grid(Gaussian(1.0), 8.0, 513)
    assert np.max(np.abs(collision_operator(g0, ModelParams(0.0)).phi - g0.phi)) < 1e-10
    # alpha = 1/2 stable law at p = 3
    s = StableLaw(0.5, 1.0)
    g3 = CFGrid(np.linspace(0, 8, 513), s.cf(np.linspace(0, 8, 513)), kappa=0.5)
    assert np.max(np.abs(collision_operator(g3, ModelParams(3.0)).phi - g3.phi)) < 1e-8


def test_collision_keeps_one_at_origin():
    g = cf_grid(ParetoSymmetric(0.5), 8.0, 257)
    q = collision_operator(g, P1)
    assert q.phi[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.abs(q.phi) <= 1 + 1e-12)


def test_evolve_times_and_errors():
    g = cf_grid(ParetoSymmetric(0.5), 8.0, 257)
    a, b = evolve_cf(g, 0.0, P1, times=[0.5, 1.0])
    c = evolve_cf(g, 1.0, P1)
    assert np.max(np.abs(b.phi - c.phi)) < 1e-13
    assert np.all(a.phi[1:] != g.phi[1:])
    with pytest.raises(ValueError):
        evolve_cf(g, 1.0, P1, dt=0.5)
    with pytest.raises(ValueError):
        evolve_cf(g, -1.0, P1)


def test_instability_is_reported():
    g = CFGrid(np.linspace(0, 4, 65), np.full(65, 1.0))
    g.phi[10] = 1.0 + 1e-3
    with pytest.raises(InstabilityError):
        evolve_cf(g, 0.1, P1)


def test_solver_matches_trees_small():
    law = ParetoSymmetric(0.5)
    g = cf_grid(law, 8.0, 513)
    sol = evolve_cf(g, 1.0, P1)
    xi = g.xi[::32][:8]
    tr = cf_from_trees(xi, 1.0, law, P1, 60_000, seed=11)
    diff = np.abs(sol.phi[::32][:8] - tr.phi)
    assert np.all(diff < 4 * tr.sigma + 1e-4)


def test_limit_check():
    g = cf_grid(Cauchy(), 4.0, 65)
    assert limit_check(g, StableLaw(1.0, 1.0)) < 1e-15
    pm = cf_grid(PointMass(), 4.0, 65)
    assert limit_check(pm, 0) == 0.0
    with pytest.raises(ValueError):
        limit_check(g, 0.5)


def test_trees_cf_exact_for_cauchy():
    xi = np.array([0.0, 0.5, 2.0])
    tr = cf_from_trees(xi, 2.0, Cauchy(), P1, 2000, seed=1)
    assert np.allclose(tr.phi, np.exp(-xi), atol=1e-13)
