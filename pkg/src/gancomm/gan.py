"""Conditional GAN that stands in for the channel.

The generator maps [z, m] -> fake received block, where z is standard
normal and m is the conditioning: the transmitted block x on AWGN, or
[x, received pilots] on fading channels. The discriminator maps
[y, m] -> one real/fake logit. Because the generator is an explicit dense
net, gradients can flow from a receiver loss through the fake block back
into the transmitter, which the real channel cannot offer.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .config import ConfigError


class Generator:
    """Dense net over [z, conditioning] producing a fake received block."""

    def __init__(self, net: nn.DenseNet, n: int, z_dim: int, cond_dim: int):
        if z_dim < 1 or cond_dim < 1:
            raise ValueError("z_dim and cond_dim must be >= 1")
        if net.input_dim != z_dim + cond_dim:
            raise ConfigError(
                f"generator net takes {net.input_dim} inputs, expected "
                f"z_dim + cond_dim = {z_dim + cond_dim}"
            )
        if net.output_dim != 2 * n:
            raise ConfigError(
                f"generator net emits {net.output_dim} values, expected 2n = {2 * n}"
            )
        self.net = net
        self.n = n
        self.z_dim = z_dim
        self.cond_dim = cond_dim

    @classmethod
    def create(
        cls,
        n: int,
        cond_dim: int,
        rng: np.random.Generator,
        z_dim: int = 16,
        hidden: tuple[int, ...] = (128, 128, 128),
        hidden_activation: str = "relu",
    ) -> "Generator":
        net = nn.DenseNet.create(
            (z_dim + cond_dim, *hidden, 2 * n), rng, hidden_activation=hidden_activation
        )
        return cls(net, n, z_dim, cond_dim)


class Discriminator:
    """Dense net over [y, conditioning] producing one real/fake logit."""

    def __init__(self, net: nn.DenseNet, n: int, cond_dim: int):
        if net.input_dim != 2 * n + cond_dim:
            raise ConfigError(
                f"discriminator net takes {net.input_dim} inputs, expected "
                f"2n + cond_dim = {2 * n + cond_dim}"
            )
        if net.output_dim != 1:
            raise ConfigError(
                f"discriminator net emits {net.output_dim} values, expected 1 logit"
            )
        self.net = net
        self.n = n
        self.cond_dim = cond_dim

    @classmethod
    def create(
        cls,
        n: int,
        cond_dim: int,
        rng: np.random.Generator,
        hidden: tuple[int, ...] = (32, 32, 32),
        hidden_activation: str = "relu",
    ) -> "Discriminator":
        net = nn.DenseNet.create(
            (2 * n + cond_dim, *hidden, 1), rng, hidden_activation=hidden_activation
        )
        return cls(net, n, cond_dim)


def sample_z(rng: np.random.Generator, batch: int, z_dim: int) -> np.ndarray:
    """Standard normal noise input, (batch, z_dim)."""
    return rng.standard_normal((batch, z_dim))


def _check_cond(m: np.ndarray, cond_dim: int, batch: int) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (batch, cond_dim):
        raise nn.ShapeError(
            f"conditioning must be ({batch}, {cond_dim}), got {m.shape}"
        )
    return m


def generate(g: Generator, z: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Fake received blocks for noise z under conditioning m."""
    out, _ = generate_with_tape(g, z, m)
    return out


def generate_with_tape(
    g: Generator, z: np.ndarray, m: np.ndarray
) -> tuple[np.ndarray, nn.Tape]:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != g.z_dim:
        raise nn.ShapeError(f"z must be (batch, {g.z_dim}), got {z.shape}")
    m = _check_cond(m, g.cond_dim, z.shape[0])
    return nn.forward(g.net, np.concatenate([z, m], axis=1))


def discriminate(d: Discriminator, y: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Real/fake logits, (batch, 1). Positive favors 'real'."""
    out, _ = discriminate_with_tape(d, y, m)
    return out


def discriminate_with_tape(
    d: Discriminator, y: np.ndarray, m: np.ndarray
) -> tuple[np.ndarray, nn.Tape]:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2 * d.n:
        raise nn.ShapeError(f"y must be (batch, {2 * d.n}), got {y.shape}")
    m = _check_cond(m, d.cond_dim, y.shape[0])
    return nn.forward(d.net, np.concatenate([y, m], axis=1))


def d_loss(
    d: Discriminator,
    real_y: np.ndarray,
    fake_y: np.ndarray,
    m: np.ndarray,
    real_target: float = 1.0,
) -> tuple[float, nn.Gradients, float]:
    """Discriminator BCE on a real and a fake batch under conditioning m.

    Returns (loss, parameter gradients, classification accuracy). The fake
    batch is treated as a constant: no gradient flows to the generator
    here. real_target below 1.0 applies one-sided label smoothing.
    """
    if not 0.5 < real_target <= 1.0:
        raise ValueError("real_target must lie in (0.5, 1.0]")
    logits_r, tape_r = discriminate_with_tape(d, real_y, m)
    logits_f, tape_f = discriminate_with_tape(d, fake_y, m)
    loss_r, grad_r = nn.sigmoid_bce(logits_r, np.full_like(logits_r, real_target))
    loss_f, grad_f = nn.sigmoid_bce(logits_f, np.zeros_like(logits_f))
    grads_r, _ = nn.backward(d.net, tape_r, grad_r)
    grads_f, _ = nn.backward(d.net, tape_f, grad_f)
    loss = float(loss_r + loss_f)
    if not np.isfinite(loss):
        raise nn.NonFiniteError("discriminator loss is not finite")
    accuracy = float(0.5 * (np.mean(logits_r > 0.0) + np.mean(logits_f <= 0.0)))
    return loss, grads_r.add(grads_f), accuracy


def g_loss(
    g: Generator, d: Discriminator, z: np.ndarray, m: np.ndarray
) -> tuple[float, nn.Gradients]:
    """Non-saturating generator loss: BCE of D(fake) against target 'real'.

    The discriminator is read but not updated; only its input gradient is
    used to reach the generator parameters.
    """
    fake_y, g_tape = generate_with_tape(g, z, m)
    logits, d_tape = discriminate_with_tape(d, fake_y, m)
    loss, grad_logits = nn.sigmoid_bce(logits, np.ones_like(logits))
    if not np.isfinite(loss):
        raise nn.NonFiniteError("generator loss is not finite")
    _, d_input_grad = nn.backward(d.net, d_tape, grad_logits)
    upstream_fake = d_input_grad[:, : 2 * d.n]
    g_grads, _ = nn.backward(g.net, g_tape, upstream_fake)
    return float(loss), g_grads
