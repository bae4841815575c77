import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blebsim.oracles import (
    OracleDomainError,
    axis_dipole_ball,
    axis_dipole_max_height,
    axis_dipole_pressure,
    axis_dipole_speed,
    ball_green_function,
    check_pressure_oracle,
    disc_dipole_pressure,
    disc_neumann_green,
    fd_gradient,
    fd_laplacian,
    fundamental_solution,
    self_check,
    self_check_passes,
)


def test_fundamental_solution_examples():
    np.testing.assert_allclose(fundamental_solution(np.array([1.0, 0.0])), [1 / (2 * math.pi), 0.0])
    np.testing.assert_allclose(fundamental_solution(np.array([0.0, 0.0, 2.0])), [0, 0, 1 / (16 * math.pi)])
    with pytest.raises(OracleDomainError):
        fundamental_solution(np.zeros(2))
    with pytest.raises(ValueError):
        fundamental_solution(np.ones(4))


@pytest.mark.parametrize("n", [2, 3])
def test_fundamental_solution_harmonic(n):
    rng = np.random.default_rng(n)
    D = rng.normal(size=n)
    x = rng.uniform(-1, 1, size=(200, n))
    x = x[np.linalg.norm(x, axis=1) >= 0.1]
    lap = fd_laplacian(lambda y: fundamental_solution(y) @ D, x)
    scale = np.linalg.norm(D) / np.linalg.norm(x, axis=1) ** (n + 1)
    assert np.max(np.abs(lap) / scale) <= 1e-5


def test_self_check_passes():
    results = self_check(seed=0, samples=500)
    assert set(results) >= {"ball_green_function", "axis_dipole_ball", "disc_neumann_green"}
    assert self_check_passes(results)
    assert results["disc_neumann_green"]["neumann"] <= 1e-6
    assert results["ball_green_function"]["neumann"] <= 1e-6


def test_self_check_catches_wrong_oracle():
    rng = np.random.default_rng(0)
    z = np.array([0.3, 0.2])
    D = np.array([1.0, 0.0])
    # the free-space kernel is harmonic but violates the Neumann condition on the circle
    res = check_pressure_oracle(lambda x: fundamental_solution(x - z) @ D, z, D, 2, rng, samples=200)
    assert not self_check_passes({"free": res})


def test_ball_green_rejects_origin():
    with pytest.raises(OracleDomainError):
        ball_green_function(np.array([0.5, 0.0, 0.0]), np.zeros(3))
    with pytest.raises(OracleDomainError):
        disc_neumann_green(np.array([0.5, 0.0]), np.zeros(2))


def test_ball_green_regular_part_bounded():
    z = np.array([0.1, -0.2, 0.3])
    D = np.array([0.3, 1.0, -0.5])
    direction = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    diffs = []
    # below r ~ 1e-4 the cancellation of two O(1/r^2) terms loses all digits
    for r in 10.0 ** -np.arange(1, 5):
        x = z + r * direction
        diffs.append(ball_green_function(x, z) @ D - fundamental_solution(x - z) @ D)
    diffs = np.array(diffs)
    assert np.all(np.isfinite(diffs))
    # converges linearly to the value of the regular part at z
    steps = np.abs(np.diff(diffs))
    assert np.all(steps[1:] < 0.2 * steps[:-1])
    assert np.max(np.abs(diffs)) < 10.0


def test_disc_regular_part_bounded():
    z = np.array([0.4, 0.1])
    D = np.array([1.0, 0.0])
    diffs = [disc_dipole_pressure(z + r * np.array([0.6, 0.8]), z, D) - fundamental_solution(r * np.array([0.6, 0.8])) @ D
             for r in 10.0 ** -np.arange(1, 5)]
    assert np.max(np.abs(diffs)) < 10.0
    assert abs(diffs[-1] - diffs[-2]) < 1e-3


def test_axis_dipole_tangency_and_pole():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(1000, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    out = axis_dipole_ball(x, 0.5)
    assert np.max(np.abs(np.einsum("ij,ij->i", out["boundary_velocity"], x))) < 1e-12
    pole = axis_dipole_ball(np.array([[0.0, 0.0, 1.0]]), 0.5)
    assert pole["speed"][0] == 0.0
    np.testing.assert_allclose(out["speed"], axis_dipole_speed(x[:, 2], 0.5), rtol=1e-12)
    with pytest.raises(OracleDomainError):
        axis_dipole_ball(x, 1.0)


def test_axis_dipole_velocity_is_minus_tangential_gradient():
    x = np.array([[0.6, 0.0, 0.8], [0.0, -0.28, 0.96], [1.0, 0.0, 0.0]])
    out = axis_dipole_ball(x, 0.5)
    g = fd_gradient(lambda y: axis_dipole_pressure(y, 0.5), x)
    g_tan = g - np.einsum("ij,ij->i", g, x)[:, None] * x
    np.testing.assert_allclose(out["boundary_velocity"], -g_tan, atol=1e-6)


def test_axis_dipole_maximizer():
    x3 = axis_dipole_max_height(0.5)
    assert x3 == pytest.approx((math.sqrt(16.5625) - 1.25) / 3, abs=1e-14)
    assert x3 == pytest.approx(0.93991, abs=1e-5)
    grid = np.linspace(-1, 1, 200001)
    assert grid[np.argmax(axis_dipole_speed(grid, 0.5))] == pytest.approx(x3, abs=1e-4)


@settings(max_examples=20)
@given(c=st.floats(0.05, 0.95))
def test_axis_dipole_maximizer_random(c):
    grid = np.linspace(-1, 1, 100001)
    assert grid[np.argmax(axis_dipole_speed(grid, c))] == pytest.approx(axis_dipole_max_height(c), abs=1e-4)


def test_disc_symmetry():
    rng = np.random.default_rng(2)
    x = rng.uniform(-0.7, 0.7, size=(500, 2))
    z = np.array([0.5, 0.0])
    D = np.array([1.0, 0.0])
    mirror = x * [1, -1]
    np.testing.assert_allclose(disc_dipole_pressure(x, z, D), disc_dipole_pressure(mirror, z, D), atol=1e-12)


@settings(max_examples=20)
@given(r=st.floats(0.1, 0.8), phi=st.floats(0, 2 * math.pi), theta=st.floats(0, 2 * math.pi))
def test_disc_neumann_condition(r, phi, theta):
    z = r * np.array([math.cos(phi), math.sin(phi)])
    D = np.array([math.cos(theta), math.sin(theta)])
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    xb = np.stack([np.cos(t), np.sin(t)], axis=1)
    g = fd_gradient(lambda y: disc_dipole_pressure(y, z, D), xb)
    dn = np.einsum("ij,ij->i", g, xb)
    scale = 1 / np.linalg.norm(xb - z, axis=1) ** 2
    assert np.max(np.abs(dn) / scale) <= 1e-6
