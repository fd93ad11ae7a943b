"""Conditional GAN pieces: generator, discriminator, both loss heads."""

import numpy as np
import pytest

from gancomm import gan, nn
from gancomm.config import ConfigError
from helpers import central_difference, relative_error

LN2 = float(np.log(2.0))


def small_gan(seed=0, n=2, cond_dim=4, z_dim=3):
    rng = np.random.default_rng(seed)
    g = gan.Generator.create(n, cond_dim, rng, z_dim=z_dim, hidden=(8, 8))
    d = gan.Discriminator.create(n, cond_dim, rng, hidden=(8,))
    return g, d


class TestConstruction:
    def test_create_shapes(self):
        g, d = small_gan()
        assert g.net.input_dim == 3 + 4
        assert g.net.output_dim == 4
        assert d.net.input_dim == 4 + 4
        assert d.net.output_dim == 1

    def test_generator_rejects_wrong_output_width(self):
        net = nn.DenseNet.create((7, 8, 5), np.random.default_rng(0))
        with pytest.raises(ConfigError):
            gan.Generator(net, n=2, z_dim=3, cond_dim=4)

    def test_generator_rejects_wrong_input_width(self):
        net = nn.DenseNet.create((6, 8, 4), np.random.default_rng(0))
        with pytest.raises(ConfigError):
            gan.Generator(net, n=2, z_dim=3, cond_dim=4)

    def test_discriminator_must_emit_one_logit(self):
        net = nn.DenseNet.create((8, 8, 2), np.random.default_rng(0))
        with pytest.raises(ConfigError):
            gan.Discriminator(net, n=2, cond_dim=4)


class TestSampling:
    def test_sample_z_shape_and_moments(self):
        z = gan.sample_z(np.random.default_rng(1), 20000, 6)
        assert z.shape == (20000, 6)
        assert abs(z.mean()) < 0.02
        assert abs(z.var() - 1.0) < 0.03

    def test_generate_shape(self):
        g, _ = small_gan()
        rng = np.random.default_rng(2)
        fake = gan.generate(g, gan.sample_z(rng, 5, 3), rng.normal(size=(5, 4)))
        assert fake.shape == (5, 4)

    def test_generate_checks_conditioning_shape(self):
        g, _ = small_gan()
        rng = np.random.default_rng(3)
        with pytest.raises(nn.ShapeError):
            gan.generate(g, gan.sample_z(rng, 5, 3), rng.normal(size=(5, 3)))

    def test_noise_actually_moves_the_output(self):
        g, _ = small_gan(seed=4)
        rng = np.random.default_rng(5)
        m = rng.normal(size=(6, 4))
        a = gan.generate(g, gan.sample_z(rng, 6, 3), m)
        b = gan.generate(g, gan.sample_z(rng, 6, 3), m)
        assert np.abs(a - b).max() > 1e-4

    def test_discriminate_shape(self):
        _, d = small_gan()
        rng = np.random.default_rng(6)
        logits = gan.discriminate(d, rng.normal(size=(5, 4)), rng.normal(size=(5, 4)))
        assert logits.shape == (5, 1)


class TestDiscriminatorLoss:
    def test_zero_logits_give_two_ln_two(self):
        # all-zero weights force logit 0 on both batches, so each BCE term
        # is exactly ln 2 and the classifier is at chance
        _, d = small_gan(seed=7)
        for layer in d.net.layers:
            layer.w[...] = 0.0
            layer.b[...] = 0.0
        rng = np.random.default_rng(8)
        loss, _, acc = gan.d_loss(
            d, rng.normal(size=(9, 4)), rng.normal(size=(9, 4)), rng.normal(size=(9, 4))
        )
        assert loss == pytest.approx(2.0 * LN2, rel=1e-15)
        assert acc == 0.5

    def test_perfectly_separated_batches_score_full_accuracy(self):
        _, d = small_gan(seed=9)
        rng = np.random.default_rng(10)
        m = np.zeros((8, 4))
        real = np.full((8, 4), 8.0)
        fake = np.full((8, 4), -8.0)
        # train a few plain gradient steps until the sign is right
        for _ in range(200):
            _, grads, acc = gan.d_loss(d, real, fake, m)
            if acc == 1.0:
                break
            flat = d.net.flat_params() - 0.5 * grads.flat()
            d.net.set_flat_params(flat)
        assert acc == 1.0

    def test_parameter_gradients_match_finite_differences(self):
        g, d = small_gan(seed=11)
        rng = np.random.default_rng(12)
        m = rng.normal(size=(6, 4))
        real = rng.normal(size=(6, 4))
        fake = gan.generate(g, gan.sample_z(rng, 6, 3), m)

        _, grads, _ = gan.d_loss(d, real, fake, m, real_target=0.9)
        flat = d.net.flat_params()
        idx = np.linspace(0, flat.size - 1, 30).astype(int)

        def at(params):
            d.net.set_flat_params(params)
            loss, _, _ = gan.d_loss(d, real, fake, m, real_target=0.9)
            return loss

        fd = central_difference(at, flat, idx)
        d.net.set_flat_params(flat)
        assert relative_error(grads.flat()[idx], fd).max() < 1e-6

    def test_label_smoothing_penalizes_confident_real_logits(self):
        # positive weights make the logit follow the input sign, so the
        # real batch lands at a large positive logit; the smoothed target
        # then adds exactly 0.1 * logit per row
        _, d = small_gan(seed=13)
        for layer in d.net.layers:
            layer.w[...] = 0.1
            layer.b[...] = 0.0
        m = np.zeros((4, 4))
        real = np.full((4, 4), 50.0)
        fake = np.full((4, 4), -50.0)
        full, _, _ = gan.d_loss(d, real, fake, m, real_target=1.0)
        smoothed, _, _ = gan.d_loss(d, real, fake, m, real_target=0.9)
        assert smoothed > full

    def test_real_target_range_is_enforced(self):
        _, d = small_gan(seed=15)
        rng = np.random.default_rng(16)
        batch = rng.normal(size=(3, 4))
        for bad in (0.5, 0.2, 1.1):
            with pytest.raises(ValueError):
                gan.d_loss(d, batch, batch, batch, real_target=bad)


class TestGeneratorLoss:
    def test_parameter_gradients_match_finite_differences(self):
        # the path runs through the discriminator's input gradient, which
        # is exactly the bridge the transmitter update relies on
        g, d = small_gan(seed=17)
        rng = np.random.default_rng(18)
        z = gan.sample_z(rng, 6, 3)
        m = rng.normal(size=(6, 4))

        _, grads = gan.g_loss(g, d, z, m)
        flat = g.net.flat_params()
        idx = np.linspace(0, flat.size - 1, 30).astype(int)

        def at(params):
            g.net.set_flat_params(params)
            loss, _ = gan.g_loss(g, d, z, m)
            return loss

        fd = central_difference(at, flat, idx)
        g.net.set_flat_params(flat)
        assert relative_error(grads.flat()[idx], fd).max() < 1e-6

    def test_discriminator_parameters_are_left_alone(self):
        g, d = small_gan(seed=19)
        rng = np.random.default_rng(20)
        before = d.net.flat_params().copy()
        gan.g_loss(g, d, gan.sample_z(rng, 4, 3), rng.normal(size=(4, 4)))
        assert np.array_equal(d.net.flat_params(), before)

    def test_loss_falls_when_fakes_start_fooling(self):
        g, d = small_gan(seed=21)
        rng = np.random.default_rng(22)
        z = gan.sample_z(rng, 16, 3)
        m = rng.normal(size=(16, 4))
        first, _ = gan.g_loss(g, d, z, m)
        for _ in range(100):
            _, grads = gan.g_loss(g, d, z, m)
            g.net.set_flat_params(g.net.flat_params() - 0.1 * grads.flat())
        last, _ = gan.g_loss(g, d, z, m)
        assert last < first

    def test_conditioning_input_gradient_matches_finite_differences(self):
        # perturbing the conditioning columns must match the slice of the
        # generator's input gradient behind z; this is how transmitter
        # gradients cross the surrogate
        g, _ = small_gan(seed=23)
        rng = np.random.default_rng(24)
        z = gan.sample_z(rng, 5, 3)
        m = rng.normal(size=(5, 4))

        fake, tape = gan.generate_with_tape(g, z, m)
        _, input_grad = nn.backward(g.net, tape, fake)
        analytic = input_grad[:, g.z_dim :]

        def at(m_flat):
            out = gan.generate(g, z, m_flat.reshape(5, 4))
            return 0.5 * float((out**2).sum())

        idx = np.arange(20)
        fd = central_difference(at, m.ravel().copy(), idx)
        assert relative_error(analytic.ravel()[idx], fd).max() < 1e-6
