import numpy as np
import pytest

from strtd import kernels

needs_compiled = pytest.mark.skipif(
    kernels.compiled_backend is None, reason="compiled kernels not built"
)


@pytest.fixture
def arrays():
    rng = np.random.default_rng(0)
    shape = (7, 5, 3)
    return {
        "a": rng.standard_normal(shape),
        "b": rng.standard_normal(shape),
        "c": rng.standard_normal(shape),
        "mask": rng.random(shape) < 0.6,
    }


def test_soft_threshold_definition():
    x = np.array([-5.0, -2.0, -0.5, 0.0, 0.5, 2.0, 5.0])
    np.testing.assert_array_equal(
        kernels.soft_threshold(x, 2.0), [-3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0]
    )
    np.testing.assert_array_equal(kernels.soft_threshold(x, 0.0), x)


def test_clamp_step_is_elementwise_clamp():
    point = np.array([[-1.0, 2.0], [0.5, -3.0]])
    np.testing.assert_array_equal(
        kernels.clamp_step(point, np.zeros_like(point), 1.0),
        [[0.0, 2.0], [0.5, 0.0]],
    )


def test_feedback_combine_semantics():
    x0 = np.array([2.0, 9.0])
    x = np.array([2.0, 9.0])
    z = np.array([1.5, 4.0])
    observed = np.array([True, False])
    out = kernels.feedback_combine(x0, x, z, observed, 0.2)
    assert out[0] == pytest.approx(2.1, abs=1e-15)
    assert out[1] == 4.0


def test_masked_reductions():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([0.0, 0.0, 1.0])
    mask = np.array([True, False, True])
    assert kernels.masked_sq_diff(a, b, mask) == pytest.approx(1.0 + 4.0)
    assert kernels.masked_sq_sum(a, mask) == pytest.approx(1.0 + 9.0)


@needs_compiled
def test_backends_agree(arrays):
    npk, ck = kernels.numpy_backend, kernels.compiled_backend
    a, b, c, mask = arrays["a"], arrays["b"], arrays["c"], arrays["mask"]
    np.testing.assert_array_equal(ck.soft_threshold(a, 0.7), npk.soft_threshold(a, 0.7))
    np.testing.assert_array_equal(
        ck.shrink_step(a, b, 0.3, 0.1), npk.shrink_step(a, b, 0.3, 0.1)
    )
    np.testing.assert_array_equal(ck.clamp_step(a, b, 0.3), npk.clamp_step(a, b, 0.3))
    np.testing.assert_array_equal(
        ck.extrapolate(a, b, 0.25), npk.extrapolate(a, b, 0.25)
    )
    np.testing.assert_array_equal(
        ck.feedback_combine(a, b, c, mask, 0.2), npk.feedback_combine(a, b, c, mask, 0.2)
    )
    assert ck.masked_sq_diff(a, b, mask) == pytest.approx(
        npk.masked_sq_diff(a, b, mask), rel=1e-12
    )
    assert ck.masked_sq_sum(a, mask) == pytest.approx(
        npk.masked_sq_sum(a, mask), rel=1e-12
    )


@needs_compiled
def test_compiled_preserves_shape_and_noncontiguous_input(arrays):
    a = arrays["a"][:, ::2, :]  # non-contiguous view
    out = kernels.compiled_backend.soft_threshold(a, 0.1)
    assert out.shape == a.shape
    np.testing.assert_array_equal(out, kernels.numpy_backend.soft_threshold(a, 0.1))


def test_set_backend_round_trip():
    original = kernels.backend_name()
    try:
        kernels.set_backend("numpy")
        assert kernels.backend_name() == "numpy"
        x = np.array([-1.0, 1.0])
        np.testing.assert_array_equal(kernels.soft_threshold(x, 0.5), [-0.5, 0.5])
        if kernels.compiled_backend is not None:
            kernels.set_backend("compiled")
            assert kernels.backend_name() == "compiled"
    finally:
        kernels.set_backend(original)
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
