import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liftedtda.errors import ImmersionError, ResolutionError, ValidationError
from liftedtda.geometry import (custom, curve_length, exact_lift, get_shape, hausdorff_distance,
                                normal_reach, normal_reach_many, normal_reach_sublevel_fraction,
                                reference_grid, sample_uniform, tangent_projection)
from liftedtda.measure import gamma_embed

ALL_SHAPES = ["circle", "lemniscate", "torus_figure8", "five_circles"]


def random_params(shape, k, seed=0):
    rng = np.random.default_rng(seed)
    lo = np.array([d[0] for d in shape.domain])
    hi = np.array([d[1] for d in shape.domain])
    return lo + (hi - lo) * rng.random((k, len(lo)))


# ---------------------------------------------------------------- shapes

@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_jacobian_full_rank(sid):
    shape = get_shape(sid)
    J = shape.jacobian(random_params(shape, 1000))
    s = np.linalg.svd(J, compute_uv=False)
    assert s[:, -1].min() > 1e-3


@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_periodic_boundary_agrees(sid):
    shape = get_shape(sid)
    if shape.intrinsic_dim == 1:
        for lo, hi in shape.components:
            # each closed component returns to its start one ulp before its end
            assert np.abs(shape.eval([lo]) - shape.eval([np.nextafter(hi, lo)])).max() <= 1e-12
    if shape.intrinsic_dim == 2:
        t = random_params(shape, 50)
        for k, (lo, hi, _) in enumerate(shape.domain):
            t0, t1 = t.copy(), t.copy()
            t0[:, k], t1[:, k] = lo, hi
            assert np.abs(shape.eval(t0) - shape.eval(t1)).max() <= 1e-12


@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_jacobian_matches_finite_differences(sid):
    shape = get_shape(sid)
    t = random_params(shape, 20, seed=1)
    fd = custom(shape.eval_fn, [(lo + 1e-5, hi - 1e-5, p) for lo, hi, p in shape.domain],
                shape.ambient_dim)
    t = np.clip(t, fd.domain[0][0] + 1e-5, fd.domain[0][1] - 1e-5)
    assert np.allclose(shape.jacobian(t), fd.jacobian(t), atol=1e-7)


def test_unknown_shape():
    with pytest.raises(ValidationError):
        get_shape("trefoil")


def test_parameter_outside_domain():
    with pytest.raises(ValidationError):
        get_shape("circle").eval([7.0])


def test_lemniscate_diameter_two():
    X, _, _ = reference_grid(get_shape("lemniscate"), 4000)
    assert X[:, 0].max() == pytest.approx(1.0, abs=1e-6)
    assert X[:, 0].min() == pytest.approx(-1.0, abs=1e-6)


# ------------------------------------------------------- tangent projection

def test_circle_projection_at_angle_zero():
    P = tangent_projection(get_shape("circle"), 0.0)
    assert np.allclose(P, [[0, 0], [0, 1]], atol=1e-15)


@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_projection_identities(sid):
    shape = get_shape(sid)
    P = tangent_projection(shape, random_params(shape, 1000, seed=2))
    d = shape.intrinsic_dim
    assert np.abs(P - np.swapaxes(P, 1, 2)).max() <= 1e-9
    assert np.abs(P @ P - P).max() <= 1e-9
    assert np.abs(np.trace(P, axis1=1, axis2=2) - d).max() <= 1e-9


def test_lemniscate_crossing_has_two_tangents():
    shape = get_shape("lemniscate")
    x = shape.eval([np.pi / 2, 3 * np.pi / 2])
    assert np.abs(x).max() < 1e-15
    P1 = tangent_projection(shape, np.pi / 2)
    P2 = tangent_projection(shape, 3 * np.pi / 2)
    # tangents at the origin are the diagonals y = x and y = -x
    assert np.allclose(P1, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)
    assert np.allclose(P2, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)


def test_rank_deficient_jacobian_raises():
    cusp = custom(lambda t: np.stack([t[:, 0] ** 2, t[:, 0] ** 3], axis=-1), [(-1.0, 1.0, False)], 2,
                  jacobian_fn=lambda t: np.stack([2 * t[:, 0], 3 * t[:, 0] ** 2], axis=-1)[:, :, None])
    with pytest.raises(ImmersionError):
        tangent_projection(cusp, 0.0)
    with pytest.raises(ImmersionError):
        exact_lift(cusp, [0.0])


# --------------------------------------------------------------- exact lift

def test_exact_lift_circle_angle_zero():
    lc = exact_lift(get_shape("circle"), [0.0])
    assert np.allclose(lc.points[0], [1, 0])
    assert np.allclose(lc.matrices[0], [[0, 0], [0, 1 / 3]], atol=1e-15)


@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_exact_lift_trace_and_psd(sid):
    shape = get_shape(sid)
    lc = exact_lift(shape, random_params(shape, 500, seed=3))
    d = shape.intrinsic_dim
    assert np.abs(np.trace(lc.matrices, axis1=1, axis2=2) - d / (d + 2)).max() <= 1e-9
    assert np.linalg.eigvalsh(lc.matrices).min() >= -1e-10
    lc.check()


def test_lemniscate_lift_injective():
    shape = get_shape("lemniscate")
    t = np.linspace(0, 2 * np.pi, 1200, endpoint=False)
    lc = exact_lift(shape, t)
    Y = gamma_embed(lc, 2.0)
    base = np.linalg.norm(lc.points[:, None] - lc.points[None], axis=-1)
    lifted = np.linalg.norm(Y[:, None] - Y[None], axis=-1)
    gap = np.abs(t[:, None] - t[None])
    far = np.minimum(gap, 2 * np.pi - gap) > 0.5
    # the image touches itself, the lift stays apart
    assert base[far].min() < 1e-2
    assert lifted[far].min() > 0.3


# ----------------------------------------------------------------- sampling

@pytest.mark.parametrize("scheme", ["iid", "stratified", "regular"])
def test_single_sample_lies_on_lemniscate(scheme):
    X, t = sample_uniform(get_shape("lemniscate"), 1, 5, scheme)
    x, y = X[0]
    assert X.shape == (1, 2) and t.shape == (1, 1)
    assert (x * x + y * y) ** 2 == pytest.approx(x * x - y * y, abs=1e-14)


def test_circle_mean_near_origin():
    X, _ = sample_uniform(get_shape("circle"), 10_000, 0)
    assert np.abs(X.mean(axis=0)).max() < 0.05


def test_lemniscate_right_half_fraction():
    X, _ = sample_uniform(get_shape("lemniscate"), 100_000, 0)
    assert 0.49 <= np.mean(X[:, 0] > 0) <= 0.51


def test_circle_angles_are_uniform():
    from scipy.stats import kstest
    _, t = sample_uniform(get_shape("circle"), 5000, 3)
    assert kstest(t[:, 0] / (2 * np.pi), "uniform").pvalue > 1e-3


def test_lemniscate_samples_follow_arc_length():
    shape = get_shape("lemniscate")
    _, t = sample_uniform(shape, 20_000, 4)
    # independent arc length: polyline on a fine grid
    s = np.linspace(0, 2 * np.pi, 200_001)
    P = shape.eval(s)
    cum = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    u = np.interp(t[:, 0], s, cum) / cum[-1]
    from scipy.stats import kstest
    assert kstest(u, "uniform").pvalue > 1e-3
    assert curve_length(shape) == pytest.approx(cum[-1], rel=1e-8)


def test_regular_scheme_equal_spacing():
    shape = get_shape("circle")
    X, _ = sample_uniform(shape, 64, 1, "regular")
    steps = np.linalg.norm(np.diff(np.vstack([X, X[:1]]), axis=0), axis=1)
    assert np.ptp(steps) < 1e-8


@pytest.mark.parametrize("sid", ALL_SHAPES)
def test_sampling_bit_reproducible(sid):
    shape = get_shape(sid)
    a, ta = sample_uniform(shape, 300, 11)
    b, tb = sample_uniform(shape, 300, 11)
    assert a.tobytes() == b.tobytes() and ta.tobytes() == tb.tobytes()
    c, _ = sample_uniform(shape, 300, 12)
    assert not np.array_equal(a, c)


def test_torus_samples_follow_area_element():
    shape = get_shape("torus_figure8")
    _, t = sample_uniform(shape, 20_000, 0)
    # the outer part (distance to the axis above R) carries more area
    grid = reference_grid(shape, 40_000)

    def inside(p):
        th, ph = p[:, 0], p[:, 1]
        return np.cos(ph) * np.sin(th) * np.cos(th) - np.sin(ph) * np.sin(th) > 0

    assert grid[2][inside(grid[1])].sum() > 0.55
    expected = grid[2][inside(grid[1])].sum()
    assert np.mean(inside(t)) == pytest.approx(expected, abs=0.015)


def test_sampling_rejects_bad_input():
    with pytest.raises(ValidationError):
        sample_uniform(get_shape("circle"), 0, 0)
    with pytest.raises(ValidationError):
        sample_uniform(get_shape("circle"), 5, 0, "sobol")
    with pytest.raises(ValidationError):
        sample_uniform(get_shape("torus_figure8"), 5, 0, "regular")


# ------------------------------------------------------------- normal reach

@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_circle_normal_reach_is_diameter(R):
    shape = get_shape("circle", radius=R)
    t = random_params(shape, 100, seed=4)[:, 0]
    assert np.abs(normal_reach_many(shape, t) - 2 * R).max() <= 1e-8


def test_lemniscate_normal_reach_zero_at_crossing():
    shape = get_shape("lemniscate")
    assert normal_reach(shape, np.pi / 2) == 0.0
    assert normal_reach(shape, 3 * np.pi / 2) == 0.0


def _orth_oracle(x, s):
    """Orthogonality function on the lemniscate with a complex-step derivative."""
    z = s + 1e-30j
    D = 1 + np.sin(z) ** 2
    fx, fy = np.cos(z) / D, np.sin(z) * np.cos(z) / D
    y = np.stack([fx.real, fy.real], axis=-1)
    dy = np.stack([fx.imag, fy.imag], axis=-1) / 1e-30
    return np.einsum("kn,kn->k", x - y, dy), y


def test_lemniscate_normal_reach_rightmost_point_matches_grid_oracle():
    shape = get_shape("lemniscate")
    x = np.array([1.0, 0.0])
    s = np.linspace(0, 2 * np.pi, 1_000_001)
    g, y = _orth_oracle(x, s)
    flips = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
    dist = np.linalg.norm(y[flips] - x, axis=1)
    oracle = dist[dist > 1e-3].min()
    assert normal_reach(shape, 0.0) == pytest.approx(oracle, abs=1e-5)


def test_normal_reach_needs_curve():
    with pytest.raises(ValidationError):
        normal_reach(get_shape("torus_figure8"), 0.0)


def test_coarse_grid_raises_resolution_error():
    # a single bracket cannot enclose any root of a closed curve
    with pytest.raises(ResolutionError):
        normal_reach(get_shape("circle"), 0.3, brackets=1)


def test_normal_reach_sublevel_fraction():
    circle = get_shape("circle")
    assert normal_reach_sublevel_fraction(circle, 0.0) == 0.0
    assert normal_reach_sublevel_fraction(circle, 1.99) == 0.0
    assert normal_reach_sublevel_fraction(circle, 2.01) == 1.0
    shape = get_shape("lemniscate")
    rs = [0.02, 0.04, 0.08, 0.16]
    fr = [normal_reach_sublevel_fraction(shape, r) for r in rs]
    assert all(a <= b for a, b in zip(fr, fr[1:]))
    ratios = np.array(fr) / np.array(rs)
    assert ratios.min() > 0 and ratios.max() / ratios.min() < 4


# ---------------------------------------------------------------- Hausdorff

def test_hausdorff_examples():
    A = np.array([[0.0], [10.0]])
    assert hausdorff_distance(A, A) == 0.0
    assert hausdorff_distance([[0.0]], [[3.0]]) == 3.0
    assert hausdorff_distance(A, [[1.0]]) == 9.0


def test_hausdorff_errors():
    with pytest.raises(ValidationError):
        hausdorff_distance(np.zeros((0, 2)), np.zeros((1, 2)))
    with pytest.raises(ValidationError):
        hausdorff_distance(np.zeros((1, 2)), np.zeros((1, 3)))
    with pytest.raises(ValidationError):
        hausdorff_distance([[np.nan, 0]], [[0, 0]])


clouds = st.integers(1, 6).flatmap(
    lambda k: st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=k))


@settings(max_examples=100, deadline=None)
@given(clouds, clouds, clouds)
def test_hausdorff_symmetric_and_triangle(A, B, C):
    A, B, C = np.array(A), np.array(B), np.array(C)
    ab, ba = hausdorff_distance(A, B), hausdorff_distance(B, A)
    assert ab == ba
    assert hausdorff_distance(A, C) <= ab + hausdorff_distance(B, C) + 1e-12
