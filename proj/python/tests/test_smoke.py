import math

import numpy as np
import pytest

import topo_opt


def test_circle_generator():
    x = topo_opt.gen_circle(100, 0.05, True, 0)
    assert x.shape == (101, 2)
    np.testing.assert_array_equal(x, topo_opt.gen_circle(100, 0.05, True, 0))


def test_unit_square_bar():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    h0, h1 = topo_opt.rips_diagram(x, 1)
    assert h1.shape == (1, 2)
    assert h1[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert h1[0, 1] == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    assert np.isinf(h0[:, 1]).sum() == 1


def test_distances():
    a = np.array([[0.0, 2.0], [0.0, 4.0]])
    b = np.array([[0.0, 2.0]])
    assert topo_opt.fg_distance(a, b, 2.0) == pytest.approx(math.sqrt(6.0))
    assert topo_opt.fg_distance(a, a, 2.0) == 0.0
    assert topo_opt.fg_distance(a, b, math.inf) > 0.0


def test_loss_and_descent():
    x = topo_opt.gen_circle(30, 0.05, True, 1)
    value, grad = topo_opt.experiment_loss(x)
    assert value < 0.0
    assert grad.shape == x.shape
    out = topo_opt.descend(x, "vanilla", steps=5, lr=0.064)
    losses = [row[1] for row in out["trace"]]
    assert len(losses) == 6
    assert losses[-1] < losses[0]
    assert out["theta"].shape == x.shape


def test_bad_method():
    with pytest.raises(ValueError):
        topo_opt.descend(topo_opt.gen_circle(10), "adam")
