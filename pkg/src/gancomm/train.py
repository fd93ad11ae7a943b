"""Alternating training of transmitter, receiver, and channel GAN.

Each outer iteration runs three phases in order: the GAN fits the channel
conditioned on the current transmitter's blocks, the receiver trains on
real channel output, and the transmitter trains end-to-end with the
frozen generator standing in for the channel (the real channel offers no
gradient). The receiver loss is softmax cross-entropy over messages; the
GAN uses the non-saturating logistic losses.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import baseline, channel, checkpoint, gan, nn, transceiver
from .config import TrainConfig
from .rng import substream

# After this many consecutive GAN steps with discriminator accuracy pinned
# at 1.0 the discriminator's Adam moments are reset to let the generator
# regain footing.
PINNED_ACCURACY_RESET_STEPS = 200


@dataclass
class StepRecord:
    step: int
    iteration: int
    phase: str  # "gan", "rx", or "tx"
    loss: float
    g_loss: float | None = None
    d_accuracy: float | None = None


class TrainLog:
    """Ordered per-step records, one row per optimizer step."""

    def __init__(self) -> None:
        self.records: list[StepRecord] = []

    def append(self, record: StepRecord) -> None:
        self.records.append(record)

    def phase_losses(self, phase: str) -> np.ndarray:
        return np.array([r.loss for r in self.records if r.phase == phase])

    def last_iteration_mean(self, phase: str) -> float:
        matching = [r for r in self.records if r.phase == phase]
        if not matching:
            raise ValueError(f"no records for phase {phase!r}")
        last_it = matching[-1].iteration
        return float(np.mean([r.loss for r in matching if r.iteration == last_it]))

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["step", "iteration", "phase", "loss", "g_loss",
                             "d_accuracy"])
            for r in self.records:
                writer.writerow([
                    r.step,
                    r.iteration,
                    r.phase,
                    repr(r.loss),
                    "" if r.g_loss is None else repr(r.g_loss),
                    "" if r.d_accuracy is None else repr(r.d_accuracy),
                ])


def sample_batch(
    cfg: TrainConfig, rng: np.random.Generator
) -> tuple[np.ndarray, channel.ChannelRealization | None]:
    """Uniform message indices plus, on fading channels, one realization
    (per-block h and the configured noise level). AWGN needs none."""
    messages = rng.integers(0, cfg.M, size=cfg.batch_size)
    if not cfg.is_fading:
        return messages, None
    h = channel.rayleigh_sample(rng, cfg.batch_size)
    std = channel.noise_std_from_snr(cfg.snr_train())
    return messages, channel.ChannelRealization(h=h, noise_std=std)


def conditioning(x: np.ndarray, y_pilot: np.ndarray | None) -> np.ndarray:
    """GAN conditioning: the transmitted block, plus received pilots when
    the channel state must be inferred."""
    if y_pilot is None:
        return x
    return np.concatenate([x, y_pilot], axis=1)


def receiver_forward_backward(
    rx: transceiver.Receiver,
    onehot: np.ndarray,
    y: np.ndarray,
    y_pilot: np.ndarray | None = None,
) -> tuple[float, nn.Gradients]:
    """Cross-entropy on real channel output and its receiver gradients."""
    logits, tape = rx.forward_logits(y, y_pilot)
    loss, grad = nn.softmax_cross_entropy(logits, onehot)
    grads, _ = nn.backward(rx.net, tape, grad)
    return loss, grads


def transmitter_forward_backward(
    tx: transceiver.Transmitter,
    rx: transceiver.Receiver,
    g: gan.Generator,
    onehot: np.ndarray,
    z: np.ndarray,
    y_pilot: np.ndarray | None = None,
) -> tuple[float, nn.Gradients]:
    """End-to-end loss with the generator in place of the channel, and its
    transmitter gradients.

    The chain is onehot -> transmitter -> x -> generator(z | x, pilots) ->
    fake y -> receiver -> cross-entropy. Receiver and generator parameters
    are read only; their input gradients carry the signal back to the
    transmitter. Pilots are a fixed symbol, so the gradient w.r.t. the
    pilot part of the conditioning is dropped.
    """
    x, tx_tape = tx.encode(onehot)
    m = conditioning(x, y_pilot)
    fake_y, g_tape = gan.generate_with_tape(g, z, m)
    logits, rx_tape = rx.forward_logits(fake_y, y_pilot)
    loss, grad_logits = nn.softmax_cross_entropy(logits, onehot)
    _, rx_input_grad = nn.backward(rx.net, rx_tape, grad_logits)
    _, g_input_grad = nn.backward(g.net, g_tape, rx_input_grad[:, : 2 * tx.n])
    x_grad = g_input_grad[:, g.z_dim : g.z_dim + 2 * tx.n]
    tx_grads, _ = tx.backward(tx_tape, x_grad)
    return loss, tx_grads


def gan_update(
    g: gan.Generator,
    d: gan.Discriminator,
    g_opt: nn.AdamState,
    d_opt: nn.AdamState,
    real_y: np.ndarray,
    m: np.ndarray,
    rng_z: np.random.Generator,
    label_smoothing: float = 0.0,
    d_updates: int = 1,
) -> tuple[float, float, float]:
    """One adversarial step: d_updates discriminator updates, then one
    generator update. Returns (d loss, g loss, d accuracy)."""
    batch = real_y.shape[0]
    d_loss_val = d_acc = 0.0
    for _ in range(d_updates):
        z = gan.sample_z(rng_z, batch, g.z_dim)
        fake_y = gan.generate(g, z, m)
        d_loss_val, d_grads, d_acc = gan.d_loss(
            d, real_y, fake_y, m, real_target=1.0 - label_smoothing
        )
        nn.adam_step(d.net, d_grads, d_opt)
    z = gan.sample_z(rng_z, batch, g.z_dim)
    g_loss_val, g_grads = gan.g_loss(g, d, z, m)
    nn.adam_step(g.net, g_grads, g_opt)
    return d_loss_val, g_loss_val, d_acc


def build_system(
    cfg: TrainConfig,
) -> tuple[transceiver.Transmitter, transceiver.Receiver, gan.Generator,
           gan.Discriminator]:
    """Fresh nets for the configured system, each from its own init stream."""
    n_pilot = cfg.n_pilot if cfg.is_fading else 0
    cond_dim = 2 * cfg.n + 2 * n_pilot
    tx = transceiver.Transmitter.create(
        cfg.M, cfg.n, substream(cfg.seed, "init", "tx"),
        hidden=cfg.tx_hidden, hidden_activation=cfg.hidden_activation,
    )
    rx = transceiver.Receiver.create(
        cfg.M, cfg.n, substream(cfg.seed, "init", "rx"), n_pilot=n_pilot,
        hidden=cfg.rx_hidden, hidden_activation=cfg.hidden_activation,
    )
    g = gan.Generator.create(
        cfg.n, cond_dim, substream(cfg.seed, "init", "gen"), z_dim=cfg.z_dim,
        hidden=cfg.gen_hidden, hidden_activation=cfg.hidden_activation,
    )
    d = gan.Discriminator.create(
        cfg.n, cond_dim, substream(cfg.seed, "init", "disc"),
        hidden=cfg.disc_hidden, hidden_activation=cfg.hidden_activation,
    )
    return tx, rx, g, d


class Trainer:
    """Holds nets, optimizers, and RNG streams for one training run."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.tx, self.rx, self.generator, self.discriminator = build_system(cfg)
        self.tx_opt = nn.AdamState.for_net(self.tx.net, cfg.lr_transceiver)
        self.rx_opt = nn.AdamState.for_net(self.rx.net, cfg.lr_transceiver)
        self.g_opt = nn.AdamState.for_net(
            self.generator.net, cfg.lr_gan, beta1=cfg.gan_beta1
        )
        self.d_opt = nn.AdamState.for_net(
            self.discriminator.net, cfg.lr_disc, beta1=cfg.gan_beta1
        )
        self._g_ema = nn.EmaTracker(self.generator.net, cfg.ema_decay)
        self._rng_batch = substream(cfg.seed, "train", "batch")
        self._rng_channel = substream(cfg.seed, "train", "channel")
        self._rng_z = substream(cfg.seed, "train", "z")
        self.log = TrainLog()
        self.step = 0
        self._pinned = 0

    @property
    def noise_std(self) -> float:
        return channel.noise_std_from_snr(self.cfg.snr_train())

    def _through_channel(
        self, x: np.ndarray, realization: channel.ChannelRealization | None
    ) -> tuple[np.ndarray, np.ndarray | None]:
        if realization is None:
            return channel.awgn_apply(x, self.noise_std, self._rng_channel), None
        y = channel.fading_apply(x, realization, self._rng_channel)
        y_p = channel.pilot_receive(realization, self.cfg.n_pilot, self._rng_channel)
        return y, y_p

    def train_gan_step(self, iteration: int) -> float:
        messages, realization = sample_batch(self.cfg, self._rng_batch)
        onehot = transceiver.to_onehot(messages, self.cfg.M)
        x, _ = self.tx.encode(onehot)
        real_y, y_p = self._through_channel(x, realization)
        m = conditioning(x, y_p)
        d_loss_val, g_loss_val, d_acc = gan_update(
            self.generator, self.discriminator, self.g_opt, self.d_opt,
            real_y, m, self._rng_z,
            label_smoothing=self.cfg.label_smoothing,
            d_updates=self.cfg.d_updates,
        )
        self._g_ema.update(self.generator.net)
        self._pinned = self._pinned + 1 if d_acc >= 1.0 else 0
        if self._pinned >= PINNED_ACCURACY_RESET_STEPS:
            self.d_opt.reset_moments()
            self._pinned = 0
        self.step += 1
        self.log.append(StepRecord(self.step, iteration, "gan", d_loss_val,
                                   g_loss=g_loss_val, d_accuracy=d_acc))
        return d_loss_val

    def train_receiver_step(self, iteration: int) -> float:
        messages, realization = sample_batch(self.cfg, self._rng_batch)
        onehot = transceiver.to_onehot(messages, self.cfg.M)
        x, _ = self.tx.encode(onehot)
        y, y_p = self._through_channel(x, realization)
        loss, grads = receiver_forward_backward(self.rx, onehot, y, y_p)
        nn.adam_step(self.rx.net, grads, self.rx_opt)
        self.step += 1
        self.log.append(StepRecord(self.step, iteration, "rx", loss))
        return loss

    def generator_averaged(self) -> gan.Generator:
        """The parameter-averaged generator; the surrogate worth keeping."""
        return gan.Generator(
            self._g_ema.averaged_net(self.generator.net),
            self.generator.n, self.generator.z_dim, self.generator.cond_dim,
        )

    def train_transmitter_step(self, iteration: int) -> float:
        messages, realization = sample_batch(self.cfg, self._rng_batch)
        onehot = transceiver.to_onehot(messages, self.cfg.M)
        y_p = None
        if realization is not None:
            y_p = channel.pilot_receive(
                realization, self.cfg.n_pilot, self._rng_channel
            )
        z = gan.sample_z(self._rng_z, self.cfg.batch_size, self.cfg.z_dim)
        loss, grads = transmitter_forward_backward(
            self.tx, self.rx, self.generator, onehot, z, y_p
        )
        nn.adam_step(self.tx.net, grads, self.tx_opt)
        self.step += 1
        self.log.append(StepRecord(self.step, iteration, "tx", loss))
        return loss

    def run(self, progress=None) -> None:
        """Warm-up GAN phase, the alternating outer loop, then a receiver
        polish: extra receiver-only steps on the now-frozen constellation,
        which the interleaved schedule always leaves slightly stale."""
        cfg = self.cfg
        if cfg.warmup_gan_steps:
            losses = [self.train_gan_step(0) for _ in range(cfg.warmup_gan_steps)]
            if progress:
                progress(0, "gan", float(np.mean(losses)))
        for it in range(1, cfg.outer_iterations + 1):
            for phase, count, fn in (
                ("gan", cfg.gan_steps, self.train_gan_step),
                ("rx", cfg.rx_steps, self.train_receiver_step),
                ("tx", cfg.tx_steps, self.train_transmitter_step),
            ):
                if count == 0:
                    continue
                losses = [fn(it) for _ in range(count)]
                if progress:
                    progress(it, phase, float(np.mean(losses)))
        if cfg.final_rx_steps:
            final_it = cfg.outer_iterations + 1
            losses = [
                self.train_receiver_step(final_it)
                for _ in range(cfg.final_rx_steps)
            ]
            if progress:
                progress(final_it, "rx", float(np.mean(losses[-100:])))


def train_full(cfg: TrainConfig, out_dir: str | None = None, progress=None) -> Trainer:
    """Run the whole schedule. With out_dir set, checkpoints and the step
    log are written there even if training aborts mid-run (the partial
    state is flushed before the exception propagates)."""
    trainer = Trainer(cfg)
    try:
        trainer.run(progress)
    finally:
        if out_dir is not None:
            checkpoint.save_system(
                out_dir, cfg, trainer.tx, trainer.rx,
                trainer.generator_averaged(), trainer.discriminator,
            )
            trainer.log.to_csv(os.path.join(out_dir, "train_log.csv"))
    return trainer


def train_channel_gan(
    channel_kind: str,
    ebn0_db: float,
    steps: int,
    seed: int,
    batch_size: int = 320,
    lr_gan: float = 0.0001,
    lr_disc: float | None = None,
    gan_beta1: float = 0.0,
    ema_decay: float = 0.995,
    z_dim: int = 16,
    n_pilot: int = 1,
    gen_hidden: tuple[int, ...] = (128, 128, 128),
    disc_hidden: tuple[int, ...] = (32, 32, 32),
    label_smoothing: float = 0.0,
    d_updates: int = 2,
) -> tuple[gan.Generator, gan.Discriminator, TrainLog]:
    """GAN-only training against a fixed 16-QAM alphabet (one channel use).

    This isolates the surrogate: no transmitter or receiver learning, just
    the generator chasing the channel's conditional output distribution.
    Eb/N0 is interpreted at 4 bits per channel use. The returned generator
    carries the parameter average, not the last snapshot.
    """
    if channel_kind not in ("awgn", "rayleigh"):
        raise ValueError(f"unknown channel kind {channel_kind!r}")
    fading = channel_kind == "rayleigh"
    std = channel.noise_std_from_snr(channel.SnrSpec(ebn0_db, k=4, n=1))
    cond_dim = 2 + 2 * n_pilot if fading else 2
    g = gan.Generator.create(
        1, cond_dim, substream(seed, "init", "gen"), z_dim=z_dim, hidden=gen_hidden
    )
    d = gan.Discriminator.create(
        1, cond_dim, substream(seed, "init", "disc"), hidden=disc_hidden
    )
    g_opt = nn.AdamState.for_net(g.net, lr_gan, beta1=gan_beta1)
    d_opt = nn.AdamState.for_net(
        d.net, 4.0 * lr_gan if lr_disc is None else lr_disc, beta1=gan_beta1
    )
    ema = nn.EmaTracker(g.net, ema_decay)
    rng_batch = substream(seed, "train", "batch")
    rng_channel = substream(seed, "train", "channel")
    rng_z = substream(seed, "train", "z")
    log = TrainLog()
    pinned = 0
    for step in range(1, steps + 1):
        symbols = baseline.qam16_modulate(rng_batch.integers(0, 16, size=batch_size))
        x = channel.complex_to_iq(symbols[:, None])
        if fading:
            h = channel.rayleigh_sample(rng_batch, batch_size)
            realization = channel.ChannelRealization(h=h, noise_std=std)
            real_y = channel.fading_apply(x, realization, rng_channel)
            y_p = channel.pilot_receive(realization, n_pilot, rng_channel)
            m = conditioning(x, y_p)
        else:
            real_y = channel.awgn_apply(x, std, rng_channel)
            m = x
        d_loss_val, g_loss_val, d_acc = gan_update(
            g, d, g_opt, d_opt, real_y, m, rng_z,
            label_smoothing=label_smoothing, d_updates=d_updates,
        )
        ema.update(g.net)
        pinned = pinned + 1 if d_acc >= 1.0 else 0
        if pinned >= PINNED_ACCURACY_RESET_STEPS:
            d_opt.reset_moments()
            pinned = 0
        log.append(StepRecord(step, 0, "gan", d_loss_val,
                              g_loss=g_loss_val, d_accuracy=d_acc))
    g_avg = gan.Generator(ema.averaged_net(g.net), g.n, g.z_dim, g.cond_dim)
    return g_avg, d, log
