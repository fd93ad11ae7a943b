"""Training loop: phase updates, the surrogate gradient path, scheduling."""

import csv

import numpy as np
import pytest

from gancomm import channel, checkpoint, gan, nn, train, transceiver
from gancomm.config import TrainConfig
from helpers import central_difference, relative_error


def tiny_cfg(**overrides):
    base = dict(
        k=2, n=2, batch_size=16, outer_iterations=2, rx_steps=2, tx_steps=2,
        gan_steps=2, warmup_gan_steps=2, final_rx_steps=3, seed=3,
        tx_hidden=(8,), rx_hidden=(8,), gen_hidden=(12,), disc_hidden=(8,),
        z_dim=3,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestTrainLog:
    def test_phase_filter_and_csv_round_trip(self, tmp_path):
        log = train.TrainLog()
        log.append(train.StepRecord(1, 0, "gan", 1.5, g_loss=0.7, d_accuracy=0.5))
        log.append(train.StepRecord(2, 1, "rx", 1.25))
        log.append(train.StepRecord(3, 1, "rx", 0.75))
        assert np.array_equal(log.phase_losses("rx"), [1.25, 0.75])
        assert log.last_iteration_mean("rx") == 1.0
        path = tmp_path / "log.csv"
        log.to_csv(str(path))
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][:4] == ["step", "iteration", "phase", "loss"]
        assert float(rows[1][3]) == 1.5
        assert float(rows[1][4]) == 0.7
        assert rows[2][4] == ""

    def test_mean_covers_only_the_last_iteration(self):
        log = train.TrainLog()
        log.append(train.StepRecord(1, 1, "tx", 10.0))
        log.append(train.StepRecord(2, 2, "tx", 1.0))
        log.append(train.StepRecord(3, 2, "tx", 3.0))
        assert log.last_iteration_mean("tx") == 2.0

    def test_unknown_phase_raises(self):
        with pytest.raises(ValueError):
            train.TrainLog().last_iteration_mean("rx")


class TestSampleBatch:
    def test_awgn_needs_no_realization(self):
        cfg = tiny_cfg()
        messages, realization = train.sample_batch(cfg, np.random.default_rng(0))
        assert realization is None
        assert messages.shape == (cfg.batch_size,)
        assert messages.min() >= 0 and messages.max() < cfg.M

    def test_fading_gets_one_coefficient_per_block(self):
        cfg = tiny_cfg(channel="rayleigh")
        _, realization = train.sample_batch(cfg, np.random.default_rng(1))
        assert realization is not None
        assert np.shape(realization.h) == (cfg.batch_size,)
        expected = channel.noise_std_from_snr(cfg.snr_train())
        assert realization.noise_std == expected

    def test_conditioning_concatenates_pilots(self):
        x = np.ones((3, 4))
        y_p = np.zeros((3, 2))
        assert train.conditioning(x, None) is x
        assert train.conditioning(x, y_p).shape == (3, 6)


class TestGradientPaths:
    def test_receiver_gradients_match_finite_differences(self):
        rng = np.random.default_rng(2)
        rx = transceiver.Receiver.create(4, 2, rng, hidden=(8,))
        onehot = transceiver.to_onehot(rng.integers(0, 4, size=6), 4)
        y = rng.normal(size=(6, 4))

        _, grads = train.receiver_forward_backward(rx, onehot, y)
        flat = rx.net.flat_params()
        idx = np.linspace(0, flat.size - 1, 30).astype(int)

        def at(params):
            rx.net.set_flat_params(params)
            loss, _ = train.receiver_forward_backward(rx, onehot, y)
            return loss

        fd = central_difference(at, flat, idx)
        rx.net.set_flat_params(flat)
        assert relative_error(grads.flat()[idx], fd).max() < 1e-6

    def test_transmitter_gradients_cross_generator_and_receiver(self):
        # loss -> receiver -> generator -> power norm -> transmitter, the
        # path that replaces the unusable real-channel gradient
        cfg = tiny_cfg()
        tx, rx, g, _ = train.build_system(cfg)
        rng = np.random.default_rng(4)
        onehot = transceiver.to_onehot(rng.integers(0, 4, size=5), 4)
        z = gan.sample_z(rng, 5, cfg.z_dim)

        _, grads = train.transmitter_forward_backward(tx, rx, g, onehot, z)
        flat = tx.net.flat_params()
        idx = np.linspace(0, flat.size - 1, 40).astype(int)

        def at(params):
            tx.net.set_flat_params(params)
            loss, _ = train.transmitter_forward_backward(tx, rx, g, onehot, z)
            return loss

        fd = central_difference(at, flat, idx)
        tx.net.set_flat_params(flat)
        assert relative_error(grads.flat()[idx], fd).max() < 1e-6

    def test_transmitter_update_reads_but_never_writes_the_others(self):
        cfg = tiny_cfg()
        tx, rx, g, _ = train.build_system(cfg)
        rng = np.random.default_rng(5)
        onehot = transceiver.to_onehot(rng.integers(0, 4, size=5), 4)
        z = gan.sample_z(rng, 5, cfg.z_dim)
        rx_before = rx.net.flat_params().copy()
        g_before = g.net.flat_params().copy()
        train.transmitter_forward_backward(tx, rx, g, onehot, z)
        assert np.array_equal(rx.net.flat_params(), rx_before)
        assert np.array_equal(g.net.flat_params(), g_before)

    def test_fading_composite_path_passes_finite_differences(self):
        cfg = tiny_cfg(channel="rayleigh")
        tx, rx, g, _ = train.build_system(cfg)
        rng = np.random.default_rng(6)
        onehot = transceiver.to_onehot(rng.integers(0, 4, size=5), 4)
        z = gan.sample_z(rng, 5, cfg.z_dim)
        y_p = rng.normal(size=(5, 2))

        _, grads = train.transmitter_forward_backward(tx, rx, g, onehot, z, y_p)
        flat = tx.net.flat_params()
        idx = np.linspace(0, flat.size - 1, 30).astype(int)

        def at(params):
            tx.net.set_flat_params(params)
            loss, _ = train.transmitter_forward_backward(
                tx, rx, g, onehot, z, y_p
            )
            return loss

        fd = central_difference(at, flat, idx)
        tx.net.set_flat_params(flat)
        assert relative_error(grads.flat()[idx], fd).max() < 1e-6


class TestGanUpdate:
    def test_both_nets_move_and_step_counts_track_d_updates(self):
        cfg = tiny_cfg()
        _, _, g, d = train.build_system(cfg)
        g_opt = nn.AdamState.for_net(g.net, 1e-3)
        d_opt = nn.AdamState.for_net(d.net, 1e-3)
        rng = np.random.default_rng(7)
        real_y = rng.normal(size=(8, 4))
        m = rng.normal(size=(8, 4))
        g_before = g.net.flat_params().copy()
        d_before = d.net.flat_params().copy()
        train.gan_update(g, d, g_opt, d_opt, real_y, m, rng, d_updates=3)
        assert not np.array_equal(g.net.flat_params(), g_before)
        assert not np.array_equal(d.net.flat_params(), d_before)
        assert d_opt.step_count == 3
        assert g_opt.step_count == 1


class TestTrainer:
    def test_first_receiver_loss_starts_near_uniform_guessing(self):
        trainer = train.Trainer(tiny_cfg())
        loss = trainer.train_receiver_step(1)
        assert abs(loss - np.log(4.0)) < 0.4

    def test_schedule_produces_the_expected_record_sequence(self):
        cfg = tiny_cfg()
        trainer = train.Trainer(cfg)
        trainer.run()
        records = trainer.log.records
        expected_total = (
            cfg.warmup_gan_steps
            + cfg.outer_iterations * (cfg.gan_steps + cfg.rx_steps + cfg.tx_steps)
            + cfg.final_rx_steps
        )
        assert len(records) == expected_total
        assert [r.phase for r in records[:2]] == ["gan", "gan"]
        assert all(r.iteration == 0 for r in records[:2])
        it1 = records[2:8]
        assert [r.phase for r in it1] == ["gan", "gan", "rx", "rx", "tx", "tx"]
        assert all(r.iteration == 1 for r in it1)
        tail = records[-cfg.final_rx_steps:]
        assert {r.phase for r in tail} == {"rx"}
        assert all(r.iteration == cfg.outer_iterations + 1 for r in tail)
        assert [r.step for r in records] == list(range(1, expected_total + 1))

    def test_identical_configs_train_to_identical_parameters(self):
        cfg = tiny_cfg()
        a = train.Trainer(cfg)
        a.run()
        b = train.Trainer(tiny_cfg())
        b.run()
        for na, nb in (
            (a.tx.net, b.tx.net), (a.rx.net, b.rx.net),
            (a.generator.net, b.generator.net),
            (a.discriminator.net, b.discriminator.net),
        ):
            assert np.array_equal(na.flat_params(), nb.flat_params())

    def test_progress_callback_sees_every_phase(self):
        seen = []
        trainer = train.Trainer(tiny_cfg())
        trainer.run(progress=lambda it, phase, loss: seen.append((it, phase)))
        assert seen[0] == (0, "gan")
        assert (1, "rx") in seen and (2, "tx") in seen
        assert seen[-1] == (3, "rx")

    def test_averaged_generator_lags_the_live_one(self):
        trainer = train.Trainer(tiny_cfg())
        for _ in range(5):
            trainer.train_gan_step(1)
        live = trainer.generator.net.flat_params()
        averaged = trainer.generator_averaged().net.flat_params()
        assert not np.array_equal(live, averaged)
        assert trainer.generator_averaged().cond_dim == trainer.generator.cond_dim

    def test_receiver_alone_learns_a_clean_channel(self):
        cfg = tiny_cfg(
            train_ebn0_db=12.0, outer_iterations=40, rx_steps=5, gan_steps=0,
            tx_steps=0, warmup_gan_steps=0, final_rx_steps=0, batch_size=64,
        )
        trainer = train.Trainer(cfg)
        trainer.run()
        losses = trainer.log.phase_losses("rx")
        assert losses[-1] < 0.5 * losses[0]
        assert trainer.log.last_iteration_mean("rx") < 1.0


class TestTrainFull:
    def test_checkpoint_holds_the_averaged_generator(self, tmp_path):
        cfg = tiny_cfg()
        trainer = train.train_full(cfg, out_dir=str(tmp_path))
        _, _, _, g_loaded, _ = checkpoint.load_system(str(tmp_path))
        assert np.array_equal(
            g_loaded.net.flat_params(),
            trainer.generator_averaged().net.flat_params(),
        )
        assert not np.array_equal(
            g_loaded.net.flat_params(), trainer.generator.net.flat_params()
        )

    def test_aborted_run_still_flushes_partial_state(self, tmp_path):
        cfg = tiny_cfg()
        calls = []

        def bomb(it, phase, loss):
            calls.append(it)
            if len(calls) == 3:
                raise RuntimeError("deliberate stop")

        with pytest.raises(RuntimeError, match="deliberate stop"):
            train.train_full(cfg, out_dir=str(tmp_path), progress=bomb)
        names = {p.name for p in tmp_path.iterdir()}
        assert set(checkpoint.CHECKPOINT_FILES) <= names
        assert "train_log.csv" in names

    def test_log_csv_written_alongside_checkpoints(self, tmp_path):
        cfg = tiny_cfg()
        train.train_full(cfg, out_dir=str(tmp_path))
        with open(tmp_path / "train_log.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) > 10


class TestChannelOnlyGan:
    def test_awgn_surrogate_conditions_on_the_block_alone(self):
        g, d, log = train.train_channel_gan(
            "awgn", 6.0, steps=3, seed=0, batch_size=8,
            gen_hidden=(8,), disc_hidden=(8,), z_dim=3,
        )
        assert g.cond_dim == 2
        assert d.cond_dim == 2
        assert len(log.records) == 3

    def test_fading_surrogate_sees_the_pilot(self):
        g, _, _ = train.train_channel_gan(
            "rayleigh", 10.0, steps=3, seed=0, batch_size=8,
            gen_hidden=(8,), disc_hidden=(8,), z_dim=3,
        )
        assert g.cond_dim == 4

    def test_unknown_channel_rejected(self):
        with pytest.raises(ValueError, match="unknown channel"):
            train.train_channel_gan("rician", 6.0, steps=1, seed=0)

    def test_same_seed_reproduces_the_surrogate(self):
        kwargs = dict(steps=4, seed=9, batch_size=8, gen_hidden=(8,),
                      disc_hidden=(8,), z_dim=3)
        g1, _, _ = train.train_channel_gan("awgn", 6.0, **kwargs)
        g2, _, _ = train.train_channel_gan("awgn", 6.0, **kwargs)
        assert np.array_equal(g1.net.flat_params(), g2.net.flat_params())
