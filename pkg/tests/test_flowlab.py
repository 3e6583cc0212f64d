import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbs.flowlab import manifolds as M
from mbs.flowlab import oracle as O

S3 = M.get_example("s3")
FLOW_EXAMPLES = ["s2xs1", "s2xt2", "s3"]


def random_point(ex, seed):
    return ex.retract(np.random.default_rng(seed).normal(size=ex.ambient_dim))


def tangent_vector(ex, x, seed):
    v = np.random.default_rng(seed + 1).normal(size=ex.ambient_dim)
    return O._tangent_field(ex, x, v)


def test_gradient_regression_value():
    # by hand: dF = (0, 1/2, 1, 0), x . dF = 3/4
    g = O.riemannian_gradient(S3, np.full(4, 0.5))
    np.testing.assert_allclose(g, [-3 / 8, 1 / 8, 5 / 8, -3 / 8], atol=1e-14)
    assert O.gradient_norm(S3, np.full(4, 0.5)) == pytest.approx(np.sqrt(11) / 4, abs=1e-12)


def test_off_manifold_point_rejected():
    with pytest.raises(O.OffManifold):
        O.riemannian_gradient(S3, [np.sqrt(3) / 3, 0, 2 * np.sqrt(3) / 3, 0])


@pytest.mark.parametrize("name", FLOW_EXAMPLES)
def test_ambient_gradient_finite_differences(name):
    ex = M.get_example(name)
    x = np.random.default_rng(3).normal(size=ex.ambient_dim)
    h = 1e-6
    fd = [(ex.f(x + h * e) - ex.f(x - h * e)) / (2 * h) for e in np.eye(ex.ambient_dim)]
    np.testing.assert_allclose(ex.ambient_gradient(x), fd, atol=1e-7)


@pytest.mark.parametrize("name", FLOW_EXAMPLES)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_riemannian_derivatives_along_curves(name, seed):
    # normalization is a second-order retraction, so both derivatives of
    # t -> f(R(x + t v)) at 0 are the Riemannian ones
    ex = M.get_example(name)
    x = random_point(ex, seed)
    v = tangent_vector(ex, x, seed)
    v /= np.linalg.norm(v)
    g = O.riemannian_gradient(ex, x)
    Hr, _ = O.riemannian_hessian(ex, x)

    def along(h):
        return [float(ex.f(ex.retract(x + t * v))) for t in (-h, 0.0, h)]

    f = along(1e-6)
    assert (f[2] - f[0]) / 2e-6 == pytest.approx(g @ v, abs=1e-8)
    f = along(1e-4)
    assert (f[2] - 2 * f[1] + f[0]) / 1e-8 == pytest.approx(v @ Hr @ v, abs=1e-5)


@pytest.mark.parametrize("name", ["torus2"] + FLOW_EXAMPLES)
def test_charts_lie_on_manifold_and_are_critical(name):
    ex = M.get_example(name)
    for orb in ex.analytic_orbits:
        for th in np.random.default_rng(0).random((5, orb.torus_dim)):
            x = orb.chart(th)
            assert np.max(np.abs(ex.constraint_residual(x))) < 1e-12
            assert float(ex.f(x)) == pytest.approx(orb.f_value, abs=1e-12)
            if not ex.is_constant:
                assert O.gradient_norm(ex, x) < 1e-12


@pytest.mark.parametrize("name", FLOW_EXAMPLES)
def test_analytic_orbit_indices(name):
    ex = M.get_example(name)
    for orb in ex.analytic_orbits:
        assert O.hessian_index(ex, orb.base_point) == orb.index
        H, B = O.normal_hessian(ex, orb.base_point)
        assert H.shape[0] == ex.manifold_dim - orb.torus_dim


@pytest.mark.parametrize("name", FLOW_EXAMPLES)
def test_orbits_are_torus_orbits(name):
    ex = M.get_example(name)
    for orb in ex.analytic_orbits:
        p = orb.base_point
        theta = np.random.default_rng(1).uniform(0, 2 * np.pi, ex.torus_rank)
        q = ex.act(theta, p)
        assert O.orbit_distance(ex, q, p) < 1e-7
        assert float(ex.f(q)) == pytest.approx(orb.f_value, abs=1e-12)


def test_hessian_index_requires_critical_point():
    with pytest.raises(O.NotCritical):
        O.hessian_index(S3, np.full(4, 0.5))


def test_trajectory_starting_on_orbit_has_one_point():
    t = O.integrate_flow(S3, S3.orbit("S_1").base_point)
    assert len(t.points) == 1 and t.converged and t.terminal_orbit == "S_1"


def test_generic_s3_flows_end_at_minimum():
    trajs = O.integrate_many(S3, O.seed_points(S3, 32, seed=5))
    assert all(t.converged and t.terminal_orbit == "S_0" for t in trajs)
    assert all(t.is_monotone() for t in trajs)
    assert all(np.max(np.abs(S3.constraint_residual(t.points))) <= 1e-12 for t in trajs)


def test_ascending_flows_end_at_maximum():
    trajs = O.integrate_many(S3, O.seed_points(S3, 16, seed=6), ascending=True)
    assert {t.terminal_orbit for t in trajs} == {"S_2"}
    assert all(t.is_monotone() for t in trajs)


def test_step_too_large():
    with pytest.raises(O.StepTooLarge):
        O.integrate_flow(M.get_example("s2xt2"), random_point(M.get_example("s2xt2"), 0), step=0.5)


def test_constant_function_and_unknown_example():
    with pytest.raises(O.ConstantFunction):
        O.find_critical_orbits(M.get_example("t2"), seeds=4)
    with pytest.raises(M.UnknownExample):
        M.get_example("rp3")


def test_connection_scan_errors():
    with pytest.raises(O.IndexZeroOrbit):
        O.connection_scan(S3, "S_0")
    with pytest.raises(O.UnknownOrbit):
        O.connection_scan(S3, "S_7")


def test_s3_critical_orbits():
    dets = O.find_critical_orbits(S3, seeds=64)
    assert [d.matched_label for d in dets] == ["S_0", "S_1", "S_2"]
    assert [d.index for d in dets] == [0, 1, 2]
    fmax = 2 * np.sqrt(3) / 9
    np.testing.assert_allclose([d.f_value for d in dets], [-fmax, 0.0, fmax], atol=1e-9)


@pytest.mark.parametrize("name", ["s2xs1", "s2xt2"])
def test_product_examples_critical_orbits(name):
    ex = M.get_example(name)
    dets = O.find_critical_orbits(ex, seeds=64)
    assert sorted(d.matched_label for d in dets) == ["S_0", "S_1_1", "S_1_2", "S_2"]
    assert {d.matched_label: d.index for d in dets} == {o.label: o.index for o in ex.analytic_orbits}


@pytest.mark.parametrize("name, upper", [("s3", "S_2"), ("s3", "S_1"), ("s2xs1", "S_2"), ("s2xs1", "S_1_1")])
def test_connections_only_descend(name, upper):
    ex = M.get_example(name)
    tally, trajs = O.connection_scan(ex, upper, samples=32, return_trajectories=True)
    idx = {o.label: o.index for o in ex.analytic_orbits}
    assert sum(n for lab, n in tally.items() if lab in idx and idx[lab] >= idx[upper]) == 0
    assert tally["unclassified"] == 0
    assert all(t.is_monotone() for t in trajs)


def test_halving_step_keeps_classifications():
    a = O.connection_scan(S3, "S_2", samples=64, return_trajectories=True)[1]
    b = O.connection_scan(S3, "S_2", samples=64, step=S3.default_step / 2, return_trajectories=True)[1]
    changed = sum(x.terminal_orbit != y.terminal_orbit for x, y in zip(a, b))
    assert changed <= 0.01 * len(a)


def test_seed_points_reproducible(monkeypatch):
    a = O.seed_points(S3, 8, seed=11)
    np.testing.assert_array_equal(a, O.seed_points(S3, 8, seed=11))
    monkeypatch.setenv("MBS_SEED", "11")
    np.testing.assert_array_equal(a, O.seed_points(S3, 8))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(FLOW_EXAMPLES))
def test_flow_decreases_f(seed, name):
    ex = M.get_example(name)
    t = O.integrate_flow(ex, random_point(ex, seed), max_time=5.0)
    assert t.is_monotone(1e-8)
    assert np.max(np.abs(ex.constraint_residual(t.points))) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_polish_lands_on_critical_set(seed):
    x = O.polish_critical(S3, random_point(S3, seed))
    assert O.gradient_norm(S3, x) < 1e-10
    assert O.classify_point(S3, x)[0] in {"S_0", "S_1", "S_2"}
