import numpy as np
import pytest
from hypothesis import given, strategies as st

from rnufrft.frft import (
    RADIAN,
    ChirpZPlan,
    FractionalAngle,
    centered_dft,
    centered_grid,
    chirp_frft_closed_form,
    frft_kernel,
    frft_uniform,
    kernel_sum,
    matched_angle,
)

# direct evaluation at 30 digits of the radian kernel on the L=4 centred grid, alpha=0.7
FROZEN_X = np.array([1, 2j, -1, 0.5 - 0.25j])
FROZEN_Y = np.array(
    [
        0.5523879389632549 + 1.0832007058126925j,
        0.6664215030114246 - 0.10037159530422123j,
        -1.426573093492834 + 1.2746679187458667j,
        -0.2770982324590222 - 1.3784295692923523j,
    ]
)


def test_frozen_small_transform():
    assert np.allclose(frft_uniform(FROZEN_X, 0.7).values, FROZEN_Y, rtol=0, atol=1e-13)


def test_angle_conversions():
    a = FractionalAngle(1.024)
    assert a.alpha == pytest.approx(1.024 * np.pi / 2)
    assert FractionalAngle.from_alpha(a.alpha).order == pytest.approx(1.024)
    assert FractionalAngle(0.0).special == 0
    assert FractionalAngle(2.0).special == 1
    assert FractionalAngle(4.0).special == 0
    assert FractionalAngle(1.0).special is None


def test_kernel_rejects_multiples_of_pi():
    with pytest.raises(ValueError):
        frft_kernel(0.0, 0.0, np.pi)


def test_kernel_reduces_to_fourier_at_half_pi():
    u, t = np.linspace(-2, 2, 5), np.linspace(-1, 1, 7)
    k = frft_kernel(u[:, None], t[None, :], np.pi / 2)
    assert np.allclose(k, np.exp(-1j * np.outer(u, t)) / np.sqrt(2 * np.pi))


@given(
    n=st.sampled_from([16, 33, 64, 100]),
    alpha=st.floats(0.3, np.pi - 0.3),
    seed=st.integers(0, 2**31),
)
def test_fast_matches_kernel_sum(n, alpha, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    t, u = centered_grid(n)
    fast = frft_uniform(x, alpha).values
    ref = kernel_sum(x, t, u, alpha, t[1] - t[0])
    assert np.max(np.abs(fast - ref)) <= 1e-9 * np.max(np.abs(ref))


@given(
    alpha=st.floats(0.2, np.pi - 0.2),
    t0=st.floats(-3, 3),
    u0=st.floats(-3, 3),
    dt=st.floats(0.05, 0.5),
    du=st.floats(0.05, 0.5),
)
def test_chirp_z_arbitrary_grids(alpha, t0, u0, dt, du):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    plan = ChirpZPlan(alpha, 20, t0, dt, 13, u0, du, weight=0.3)
    t = t0 + dt * np.arange(20)
    ref = kernel_sum(x, t, plan.u_axis, alpha, 0.3)
    assert np.allclose(plan(x), ref, rtol=0, atol=1e-9 * np.max(np.abs(ref)))


def test_batched_last_axis():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 2, 32)) + 0j
    plan = ChirpZPlan(1.1, 32, 0.0, 0.1, 32, -1.0, 0.07)
    y = plan(x)
    assert y.shape == (3, 2, 32)
    assert np.allclose(y[2, 1], plan(x[2, 1]))


def test_half_pi_is_centered_dft(rng):
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.allclose(frft_uniform(x, np.pi / 2).values, centered_dft(x), atol=1e-12)


def test_special_angles(rng):
    x = rng.standard_normal(8) + 0j
    assert np.array_equal(frft_uniform(x, 0.0).values, x)
    refl = frft_uniform(x, np.pi).values
    t, _ = centered_grid(8)
    # reflection maps t -> -t on the centred grid; index 0 (t = -L/2) maps to itself
    assert refl[0] == x[0] and np.array_equal(refl[1:], x[:0:-1])


def test_dft_unitary(rng):
    x = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    y = frft_uniform(x, np.pi / 2).values
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-12)


@pytest.mark.parametrize("m0", [-1.5, -0.3, 0.0, 0.8])
def test_matched_chirp_peak_on_grid(m0):
    """A matched chirp concentrates at u = f0 sin(alpha) with the closed-form weight."""
    n, D = 256, 1.7
    dt = 1 / np.sqrt(n)
    a = matched_angle(m0)
    # pick f0 so the peak lands exactly on the output grid
    du = 1 / (n * dt)
    u_peak = 3 * du
    f0 = u_peak / np.sin(a.alpha)
    t = np.arange(n) * dt
    x = D * np.exp(2j * np.pi * (f0 * t + 0.5 * m0 * t**2))
    y = ChirpZPlan(a.alpha, n, 0.0, dt, n, -n // 2 * du, du)(x)
    cf = chirp_frft_closed_form(D, f0, m0, a)
    k = int(np.argmax(np.abs(y)))
    assert (-n // 2 + k) * du == pytest.approx(cf.u)
    assert y[k] == pytest.approx(cf.discrete_peak(n, dt), rel=1e-9)
    if m0 == 0:
        # plain DFT: every other bin is a null
        assert np.sort(np.abs(y))[-2] < 1e-9 * abs(y[k])


def test_closed_form_rejects_mismatch():
    with pytest.raises(ValueError, match="not matched"):
        chirp_frft_closed_form(1.0, 0.0, 1.0, np.pi / 2)


def test_radian_scaling():
    u, t = 0.4, -0.9
    a = 1.2
    pi_kernel = np.sqrt(1 - 1j / np.tan(a)) * np.exp(
        1j * np.pi * (t**2 / np.tan(a) - 2 * u * t / np.sin(a) + u**2 / np.tan(a))
    )
    assert RADIAN * frft_kernel(RADIAN * u, RADIAN * t, a) == pytest.approx(pi_kernel)


def _hermite_gauss(n, t):
    from scipy.special import eval_hermite

    return eval_hermite(n, RADIAN * t) * np.exp(-np.pi * t**2)


def _hg_mix(coef, t):
    return sum(c * _hermite_gauss(n, t) for n, c in enumerate(coef))


@pytest.mark.parametrize("n", [0, 1, 2, 3])
@pytest.mark.parametrize("alpha", [0.8, 1.3, 2.1, 2.3])
def test_hermite_gauss_eigenfunctions(n, alpha):
    t, _ = centered_grid(256)
    psi = _hermite_gauss(n, t)
    y = frft_uniform(psi, alpha).values
    assert np.max(np.abs(y - np.exp(-1j * n * alpha) * psi)) < 1e-4 * np.abs(psi).max()


coefs = st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False), min_size=1, max_size=4)


# the sampled sum is periodic in u with period sqrt(L) sin a; away from pi/2 the
# copies only stay off the fixed output grid for angles in [0.8, pi - 0.8]
@given(coef=coefs, alpha=st.floats(0.8, np.pi - 0.8))
def test_approximately_unitary_on_concentrated_inputs(coef, alpha):
    t, _ = centered_grid(256)
    x = _hg_mix(coef, t)
    e = np.sum(np.abs(x) ** 2)
    if e < 1e-6:
        return
    y = frft_uniform(x, alpha).values
    assert abs(np.sum(np.abs(y) ** 2) / e - 1) < 1e-3


@given(coef=coefs, a=st.floats(0.8, 1.15), b=st.floats(0.8, 1.15))
def test_index_additivity(coef, a, b):
    t, _ = centered_grid(256)
    x = _hg_mix(coef, t)
    if np.abs(x).max() < 1e-3:
        return
    two = frft_uniform(frft_uniform(x, a).values, b).values
    one = frft_uniform(x, a + b).values
    assert np.max(np.abs(two - one)) < 1e-2 * np.abs(one).max()


def test_centered_impulse_at_half_pi_is_flat():
    L = 64
    x = np.zeros(L, complex)
    x[L // 2] = 1
    y = frft_uniform(x, np.pi / 2).values
    assert np.allclose(np.abs(y), 1 / np.sqrt(L), atol=1e-12)


def test_kernel_origin_and_symmetry():
    a = 0.9
    amp = np.sqrt((1 - 1j / np.tan(a)) / (2 * np.pi))
    assert frft_kernel(0.0, 0.0, a) == pytest.approx(amp)
    assert frft_kernel(0.4, -1.3, a) == pytest.approx(frft_kernel(-1.3, 0.4, a))


def test_quarter_pi_chirp_lands_on_predicted_bin():
    L = 256
    t, u = centered_grid(L)
    x = np.exp(2j * np.pi * (0.2 * t - 0.5 * t**2))
    ang = matched_angle(-1.0)
    assert ang.alpha == pytest.approx(np.pi / 4)
    y = np.abs(frft_uniform(x, ang).values)
    target = 0.2 * np.sin(np.pi / 4)
    assert u[np.argmax(y)] == u[np.argmin(np.abs(u - target))]
    # energy concentrated in a few bins around the peak
    top = np.sort(y**2)[::-1]
    assert top[:3].sum() > 0.5 * (y**2).sum()


def test_special_angle_dispatch_threshold(rng):
    x = rng.standard_normal(32) + 0j
    assert np.array_equal(frft_uniform(x, 0.5e-6).values, x)
    assert FractionalAngle.from_alpha(2e-6).special is None
