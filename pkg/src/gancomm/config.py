"""Run configuration with strict parsing and reproducible defaults.

Defaults follow the reference operating point: {32, 32} transmitter and
receiver hidden layers, {128, 128, 128} generator, {32, 32, 32}
discriminator, learning rates 0.001 (transceiver) / 0.0001 (GAN), batch
size 320. Unknown keys are rejected so a typo cannot silently fall back to
a default.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .channel import SnrSpec

CHANNELS = ("awgn", "rayleigh")

# Training Eb/N0 when the config does not name one.
DEFAULT_TRAIN_EBN0_DB = {"awgn": 4.0, "rayleigh": 10.0}


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or out of range."""


@dataclass
class TrainConfig:
    k: int = 4
    n: int = 7
    n_pilot: int = 1
    channel: str = "awgn"
    train_ebn0_db: float | None = None  # resolved per channel in __post_init__
    batch_size: int = 320
    lr_transceiver: float = 0.001
    lr_gan: float = 0.0001
    lr_disc: float | None = None  # resolved to 4 * lr_gan in __post_init__
    gan_beta1: float = 0.0
    ema_decay: float = 0.995
    outer_iterations: int = 600
    rx_steps: int = 10
    tx_steps: int = 10
    gan_steps: int = 20
    warmup_gan_steps: int | None = None  # resolved to 10 * gan_steps
    final_rx_steps: int = 2000
    seed: int = 1
    z_dim: int = 16
    tx_hidden: tuple[int, ...] = (32, 32)
    rx_hidden: tuple[int, ...] = (32, 32)
    gen_hidden: tuple[int, ...] = (128, 128, 128)
    disc_hidden: tuple[int, ...] = (32, 32, 32)
    hidden_activation: str = "relu"
    label_smoothing: float = 0.0
    d_updates: int = 2

    def __post_init__(self) -> None:
        for name in ("tx_hidden", "rx_hidden", "gen_hidden", "disc_hidden"):
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.channel in CHANNELS and self.train_ebn0_db is None:
            self.train_ebn0_db = DEFAULT_TRAIN_EBN0_DB[self.channel]
        if self.warmup_gan_steps is None:
            self.warmup_gan_steps = 10 * self.gan_steps
        if self.lr_disc is None:
            self.lr_disc = 4.0 * self.lr_gan
        self.validate()

    def validate(self) -> None:
        def require(ok: bool, key: str, why: str) -> None:
            if not ok:
                raise ConfigError(f"{key}: {why}")

        require(self.channel in CHANNELS, "channel", f"must be one of {CHANNELS}")
        require(self.k >= 1, "k", "must be >= 1")
        require(self.n >= 1, "n", "must be >= 1")
        require(self.n_pilot >= 1, "n_pilot", "must be >= 1")
        require(self.batch_size >= 1, "batch_size", "must be >= 1")
        require(self.lr_transceiver > 0, "lr_transceiver", "must be > 0")
        require(self.lr_gan > 0, "lr_gan", "must be > 0")
        require(self.lr_disc > 0, "lr_disc", "must be > 0")
        require(0.0 <= self.gan_beta1 < 1.0, "gan_beta1", "must lie in [0, 1)")
        require(0.0 <= self.ema_decay < 1.0, "ema_decay", "must lie in [0, 1)")
        require(self.outer_iterations >= 1, "outer_iterations", "must be >= 1")
        for key in ("rx_steps", "tx_steps", "gan_steps", "warmup_gan_steps",
                    "final_rx_steps"):
            require(getattr(self, key) >= 0, key, "must be >= 0")
        require(self.seed >= 0, "seed", "must be a non-negative integer")
        require(self.z_dim >= 1, "z_dim", "must be >= 1")
        for key in ("tx_hidden", "rx_hidden", "gen_hidden", "disc_hidden"):
            require(
                len(getattr(self, key)) >= 1 and all(w >= 1 for w in getattr(self, key)),
                key,
                "must list positive layer widths",
            )
        require(
            self.hidden_activation in ("relu", "tanh"),
            "hidden_activation",
            "must be 'relu' or 'tanh'",
        )
        require(
            0.0 <= self.label_smoothing < 0.5,
            "label_smoothing",
            "must lie in [0, 0.5)",
        )
        require(self.d_updates >= 1, "d_updates", "must be >= 1")
        require(
            float(self.train_ebn0_db) == float(self.train_ebn0_db)
            and abs(float(self.train_ebn0_db)) < 1e6,
            "train_ebn0_db",
            "must be a finite dB value",
        )

    @property
    def M(self) -> int:
        return 2**self.k

    @property
    def is_fading(self) -> bool:
        return self.channel == "rayleigh"

    def snr_train(self) -> SnrSpec:
        return SnrSpec(ebn0_db=float(self.train_ebn0_db), k=self.k, n=self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("tx_hidden", "rx_hidden", "gen_hidden", "disc_hidden"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for f in fields(cls):
            if f.name not in data or data[f.name] is None:
                continue
            value = data[f.name]
            try:
                kwargs[f.name] = _coerce(f.name, value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{f.name}: {exc}") from None
        return cls(**kwargs)


_INT_KEYS = {
    "k", "n", "n_pilot", "batch_size", "outer_iterations", "rx_steps",
    "tx_steps", "gan_steps", "warmup_gan_steps", "final_rx_steps", "seed",
    "z_dim", "d_updates",
}
_FLOAT_KEYS = {"train_ebn0_db", "lr_transceiver", "lr_gan", "lr_disc",
               "gan_beta1", "ema_decay", "label_smoothing"}
_STR_KEYS = {"channel", "hidden_activation"}
_TUPLE_KEYS = {"tx_hidden", "rx_hidden", "gen_hidden", "disc_hidden"}


def _coerce(key: str, value):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ValueError(f"expected a string, got {value!r}")
        return value
    if key in _TUPLE_KEYS:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise ValueError(f"expected a list of integers, got {value!r}")
        return tuple(value)
    raise ValueError(f"unhandled key {key!r}")


def load_config(path: str) -> TrainConfig:
    """Parse a JSON config file; unspecified fields take the defaults."""
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    return TrainConfig.from_dict(data)


def save_config(cfg: TrainConfig, path: str) -> None:
    with open(path, "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
