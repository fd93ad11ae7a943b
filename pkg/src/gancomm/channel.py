"""Ground-truth channel simulators: AWGN and Rayleigh block fading.

Blocks of n complex channel uses travel as (batch, 2n) float64 arrays with
interleaved (re, im) pairs, matching the network input/output layout. One
fading coefficient h applies to a whole block (and to its pilot), drawn
fresh per block.

These simulators generate the data the channel GAN trains on and carry all
final evaluation traffic. They are observation-only: there is deliberately
no gradient path through this module (see ``backward``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def iq_to_complex(blocks: np.ndarray) -> np.ndarray:
    """(batch, 2n) interleaved reals -> (batch, n) complex."""
    blocks = np.asarray(blocks, dtype=np.float64)
    return blocks[..., 0::2] + 1j * blocks[..., 1::2]


def complex_to_iq(symbols: np.ndarray) -> np.ndarray:
    """(batch, n) complex -> (batch, 2n) interleaved reals."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    out = np.empty(symbols.shape[:-1] + (2 * symbols.shape[-1],), dtype=np.float64)
    out[..., 0::2] = symbols.real
    out[..., 1::2] = symbols.imag
    return out


@dataclass(frozen=True)
class SnrSpec:
    """An Eb/N0 operating point for a rate k/n block code."""

    ebn0_db: float
    k: int  # information bits per block
    n: int  # complex channel uses per block

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be >= 1")
        if not np.isfinite(self.ebn0_db):
            raise ValueError("ebn0_db must be finite")


def noise_std_from_snr(spec: SnrSpec) -> float:
    """Per-real-dimension noise standard deviation for an Eb/N0 point.

    With unit average power per complex use and rate R = k/n bits per use,
    N0 = 1 / (R * 10^(ebn0_db/10)); the noise is CN(0, N0), i.e. variance
    N0/2 per real dimension.
    """
    rate = spec.k / spec.n
    n0 = 1.0 / (rate * 10.0 ** (spec.ebn0_db / 10.0))
    return float(np.sqrt(n0 / 2.0))


@dataclass(frozen=True)
class ChannelRealization:
    """One block's fading coefficient and noise level.

    ``h`` is a scalar for a single block or a (batch,) array for a batch of
    independently faded blocks; ``noise_std`` is per real dimension.
    """

    h: complex | np.ndarray
    noise_std: float


def awgn_apply(x: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    """y = x + w with w i.i.d. Gaussian(0, std^2) per real dimension."""
    x = np.asarray(x, dtype=np.float64)
    if std < 0:
        raise ValueError("std must be >= 0")
    if std == 0:
        return x.copy()
    return x + rng.normal(0.0, std, size=x.shape)


def rayleigh_sample(rng: np.random.Generator, size: int | None = None):
    """Draw h ~ CN(0, 1): independent Gaussian re/im, E[|h|^2] = 1."""
    shape = () if size is None else (size,)
    re = rng.normal(0.0, np.sqrt(0.5), size=shape)
    im = rng.normal(0.0, np.sqrt(0.5), size=shape)
    h = re + 1j * im
    return complex(h) if size is None else h


def fading_apply(
    x: np.ndarray, realization: ChannelRealization, rng: np.random.Generator
) -> np.ndarray:
    """y_i = h * x_i + w_i; one h multiplies every complex use of a block."""
    x = np.asarray(x, dtype=np.float64)
    symbols = iq_to_complex(x)
    h = np.asarray(realization.h, dtype=np.complex128)
    if h.ndim == 1:
        if x.ndim != 2 or h.shape[0] != x.shape[0]:
            raise ValueError(f"h batch {h.shape} does not match blocks {x.shape}")
        faded = symbols * h[:, None]
    else:
        faded = symbols * h
    out = complex_to_iq(faded)
    if realization.noise_std > 0:
        out = out + rng.normal(0.0, realization.noise_std, size=out.shape)
    return out


def pilot_receive(
    realization: ChannelRealization, n_pilot: int, rng: np.random.Generator
) -> np.ndarray:
    """Receive the known all-ones pilot: y_p = h * 1 + w, per pilot use.

    Shape (2*n_pilot,) for a scalar h, (batch, 2*n_pilot) for a batched one.
    """
    if n_pilot < 1:
        raise ValueError("n_pilot must be >= 1")
    h = np.asarray(realization.h, dtype=np.complex128)
    if h.ndim == 1:
        pilots = np.ones((h.shape[0], n_pilot), dtype=np.float64)
        x = complex_to_iq(pilots.astype(np.complex128))
    else:
        x = complex_to_iq(np.ones((1, n_pilot), dtype=np.complex128))
    y = fading_apply(x, realization, rng)
    return y if h.ndim == 1 else y[0]


def backward(*_args, **_kwargs):
    """Deliberately unimplemented: the physical channel is not differentiable.

    Transmitter gradients must flow through the generator surrogate; asking
    the real channel for a gradient is a programming error.
    """
    raise RuntimeError(
        "the real channel has no backward path; route transmitter gradients "
        "through the GAN surrogate"
    )


def dump_trace(
    path: str,
    x: np.ndarray,
    y: np.ndarray,
    h: np.ndarray | None = None,
) -> None:
    """Debug CSV of transmitted/received blocks, one row per channel use."""
    x_c = iq_to_complex(np.atleast_2d(x))
    y_c = iq_to_complex(np.atleast_2d(y))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["block_id", "use_index", "x_re", "x_im", "y_re", "y_im", "h_re", "h_im"]
        )
        for b in range(x_c.shape[0]):
            hb = 1.0 + 0.0j if h is None else complex(np.asarray(h).reshape(-1)[b % np.asarray(h).size])
            for u in range(x_c.shape[1]):
                writer.writerow(
                    [b, u, repr(x_c[b, u].real), repr(x_c[b, u].imag),
                     repr(y_c[b, u].real), repr(y_c[b, u].imag),
                     repr(hb.real), repr(hb.imag)]
                )
