"""Tests for the activation-edge circuit, gradients and extension.

The reference oracle below rebuilds the circuit from explicit 2x2
matrix products with its own gate definitions, so agreement with the
vectorized implementation is a real cross-check rather than a identity.
"""

import numpy as np
import pytest

from qkan import daruan
from qkan.daruan import DaruanParams, init_daruan


def oracle_rz(a):
    return np.array([[np.exp(-0.5j * a), 0.0], [0.0, np.exp(0.5j * a)]])


def oracle_ry(a):
    c, s = np.cos(a / 2.0), np.sin(a / 2.0)
    return np.array([[c, -s], [s, c]])


def oracle_expectation(p: DaruanParams, x: float) -> float:
    """Literal matrix-chain evaluation of <Z| for one edge."""
    psi = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    for l in range(p.r):
        al, be, ga = p.angles[l]
        psi = oracle_rz(ga) @ (oracle_ry(be) @ (oracle_rz(al) @ psi))
        psi = oracle_rz(p.enc_w[l] * x + p.enc_b[l]) @ psi
    al, be, ga = p.angles[p.r]
    psi = oracle_rz(ga) @ (oracle_ry(be) @ (oracle_rz(al) @ psi))
    return float(abs(psi[0]) ** 2 - abs(psi[1]) ** 2)


def fixed_params() -> DaruanParams:
    return DaruanParams(
        enc_w=np.array([1.0, 2.0]),
        enc_b=np.array([0.3, -0.4]),
        angles=np.array([[0.1, 0.2, 0.3],
                         [-0.2, 0.5, 0.1],
                         [0.4, -0.3, 0.2]]),
        w_base=0.7, w_quant=1.3, out_bias=-0.2,
    )


def sine_params() -> DaruanParams:
    # W1 identity, W2 = ry(pi/2), u = x + pi/2: raw expectation sin(x)
    return DaruanParams(
        enc_w=np.array([1.0]),
        enc_b=np.array([np.pi / 2.0]),
        angles=np.array([[0.0, 0.0, 0.0], [0.0, np.pi / 2.0, 0.0]]),
        w_base=0.0, w_quant=1.0, out_bias=0.0,
    )


class TestForward:
    # frozen matrix-chain values for fixed_params
    FROZEN = {0.0: -0.37934581463449657,
              0.5: -0.5756688491924454,
              -1.25: -0.7447180701728333}

    def test_matches_frozen_values(self):
        p = fixed_params()
        for x, expected in self.FROZEN.items():
            np.testing.assert_allclose(daruan.raw_expectation(p, x), expected,
                                       atol=1e-14)

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(11)
        for r in (1, 2, 4):
            p = init_daruan(r, rng, angle_scale=1.5)
            p.enc_b = rng.normal(size=r)
            for x in rng.normal(size=4):
                np.testing.assert_allclose(daruan.raw_expectation(p, x),
                                           oracle_expectation(p, x),
                                           atol=1e-13)

    def test_sine_configuration(self):
        p = sine_params()
        for x in np.linspace(-3.0, 3.0, 13):
            np.testing.assert_allclose(daruan.raw_expectation(p, x),
                                       np.sin(x), atol=1e-14)

    def test_raw_expectation_bounded(self):
        rng = np.random.default_rng(12)
        p = init_daruan(3, rng, angle_scale=3.0)
        for x in rng.normal(scale=5.0, size=50):
            assert abs(daruan.raw_expectation(p, x)) <= 1.0 + 1e-12

    def test_periodicity_with_integer_weights(self):
        p = init_daruan(3, np.random.default_rng(13), geometric=False)
        p.enc_b = np.array([0.2, -0.1, 0.5])
        for x in (0.0, 0.9, -1.7):
            np.testing.assert_allclose(
                daruan.raw_expectation(p, x + 2.0 * np.pi),
                daruan.raw_expectation(p, x), atol=1e-13)

    def test_forward_combines_paths(self):
        p = fixed_params()
        x = 0.5
        expected = (p.w_base * x / (1.0 + np.exp(-x))
                    + p.w_quant * daruan.raw_expectation(p, x) + p.out_bias)
        np.testing.assert_allclose(daruan.forward(p, x), expected, atol=1e-14)

    def test_nonfinite_input_rejected(self):
        p = fixed_params()
        with pytest.raises(ValueError):
            daruan.forward(p, np.nan)


class TestParamsValidation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DaruanParams(enc_w=np.ones(2), enc_b=np.ones(3),
                         angles=np.zeros((3, 3)))
        with pytest.raises(ValueError):
            DaruanParams(enc_w=np.ones(2), enc_b=np.ones(2),
                         angles=np.zeros((2, 3)))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            DaruanParams(enc_w=np.array([1.0, np.nan]), enc_b=np.zeros(2),
                         angles=np.zeros((3, 3)))

    def test_geometric_init_weights(self):
        p = init_daruan(4, np.random.default_rng(0))
        np.testing.assert_array_equal(p.enc_w, [1.0, 2.0, 4.0, 8.0])
        q = init_daruan(4, np.random.default_rng(0), geometric=False)
        np.testing.assert_array_equal(q.enc_w, np.ones(4))


class TestGradients:
    def all_params(self, p):
        for l in range(p.r):
            yield ("enc_w", l)
            yield ("enc_b", l)
        for l in range(p.r + 1):
            for k in range(3):
                yield ("angle", l, k)

    def perturbed(self, p, which, eps):
        q = p.copy()
        if which[0] == "enc_w":
            q.enc_w[which[1]] += eps
        elif which[0] == "enc_b":
            q.enc_b[which[1]] += eps
        else:
            q.angles[which[1], which[2]] += eps
        return q

    def grad_field(self, g, which):
        if which[0] == "enc_w":
            return g.enc_w[which[1]]
        if which[0] == "enc_b":
            return g.enc_b[which[1]]
        return g.angles[which[1], which[2]]

    def test_adjoint_matches_finite_differences(self):
        p = fixed_params()
        eps = 1e-6
        for x in (0.0, 0.83, -1.4):
            g = daruan.backward(p, x)
            for which in self.all_params(p):
                fd = (daruan.forward(self.perturbed(p, which, eps), x)
                      - daruan.forward(self.perturbed(p, which, -eps), x)) \
                    / (2.0 * eps)
                np.testing.assert_allclose(self.grad_field(g, which), fd,
                                           atol=1e-8)

    def test_adjoint_matches_parameter_shift(self):
        p = fixed_params()
        p.w_base, p.w_quant, p.out_bias = 0.0, 1.0, 0.0
        for x in (0.3, -0.9):
            g = daruan.backward(p, x)
            for which in self.all_params(p):
                ps = daruan.parameter_shift_grad(p, x, which)
                np.testing.assert_allclose(self.grad_field(g, which), ps,
                                           atol=1e-12)

    def test_sine_configuration_derivative(self):
        p = sine_params()
        for x in (0.0, 0.6, 2.1):
            g = daruan.backward(p, x)
            np.testing.assert_allclose(g.d_input, np.cos(x), atol=1e-12)

    def test_classical_path_gradients(self):
        p = fixed_params()
        x = 0.4
        g = daruan.backward(p, x, upstream=2.0)
        silu = x / (1.0 + np.exp(-x))
        np.testing.assert_allclose(g.w_base, 2.0 * silu, atol=1e-14)
        np.testing.assert_allclose(g.w_quant,
                                   2.0 * daruan.raw_expectation(p, x),
                                   atol=1e-14)
        np.testing.assert_allclose(g.out_bias, 2.0, atol=1e-15)

    def test_input_derivative_finite_differences(self):
        p = fixed_params()
        eps = 1e-6
        for x in (0.2, -0.7):
            g = daruan.backward(p, x)
            fd = (daruan.forward(p, x + eps)
                  - daruan.forward(p, x - eps)) / (2.0 * eps)
            np.testing.assert_allclose(g.d_input, fd, atol=1e-8)

    def test_parameter_shift_rejects_classical_params(self):
        p = fixed_params()
        for which in (("w_base",), ("w_quant",), ("out_bias",)):
            with pytest.raises(ValueError):
                daruan.parameter_shift_grad(p, 0.5, which)


class TestBatchedConsistency:
    def test_batched_expectation_matches_scalar(self):
        rng = np.random.default_rng(21)
        n, m, r, b = 3, 2, 2, 5
        enc_w = rng.normal(size=(n, m, r))
        enc_b = rng.normal(size=(n, m, r))
        angles = rng.normal(size=(n, m, r + 1, 3))
        x = rng.normal(size=(b, m))
        f = daruan.circuit_expectation(enc_w, enc_b, angles, x)
        assert f.shape == (b, n, m)
        for bi in range(b):
            for ni in range(n):
                for mi in range(m):
                    p = DaruanParams(enc_w[ni, mi], enc_b[ni, mi],
                                     angles[ni, mi])
                    np.testing.assert_allclose(
                        f[bi, ni, mi], daruan.raw_expectation(p, x[bi, mi]),
                        atol=1e-13)

    def test_batched_gradients_match_scalar(self):
        rng = np.random.default_rng(22)
        n, m, r, b = 2, 2, 3, 3
        enc_w = rng.normal(size=(n, m, r))
        enc_b = rng.normal(size=(n, m, r))
        angles = rng.normal(size=(n, m, r + 1, 3))
        x = rng.normal(size=(b, m))
        f, g_enc, g_ang = daruan.circuit_gradients(enc_w, enc_b, angles, x)
        for bi in range(b):
            for ni in range(n):
                for mi in range(m):
                    p = DaruanParams(enc_w[ni, mi], enc_b[ni, mi],
                                     angles[ni, mi], w_base=0.0)
                    g = daruan.backward(p, x[bi, mi])
                    np.testing.assert_allclose(g_enc[bi, ni, mi], g.enc_b,
                                               atol=1e-12)
                    np.testing.assert_allclose(g_ang[bi, ni, mi], g.angles,
                                               atol=1e-12)


class TestExtension:
    def test_forward_invariance(self):
        rng = np.random.default_rng(31)
        p = init_daruan(2, rng, angle_scale=1.0)
        p.enc_b = rng.normal(size=2)
        q = daruan.extend(p, 5)
        assert q.r == 5
        for x in np.linspace(-4.0, 4.0, 17):
            np.testing.assert_allclose(daruan.forward(q, x),
                                       daruan.forward(p, x), atol=0.0)

    def test_appended_blocks_are_zero(self):
        p = init_daruan(2, np.random.default_rng(32))
        q = daruan.extend(p, 4)
        np.testing.assert_array_equal(q.enc_w[2:], 0.0)
        np.testing.assert_array_equal(q.enc_b[2:], 0.0)
        np.testing.assert_array_equal(q.angles[3:], 0.0)
        np.testing.assert_array_equal(q.angles[:3], p.angles)

    def test_must_grow(self):
        p = init_daruan(3, np.random.default_rng(33))
        with pytest.raises(ValueError):
            daruan.extend(p, 3)
        with pytest.raises(ValueError):
            daruan.extend(p, 2)
