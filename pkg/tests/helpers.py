"""Instance builders shared by the test modules."""

import numpy as np

from risopt import RngStream
from risopt.channel import generate_channel_set, rayleigh_channel_set
from risopt.selfcheck import desk_scenario

# 30 dBm over two streams, 800 MHz of thermal noise
NOISE_800MHZ = 10 ** ((-174 + 10 * np.log10(800e6) - 30) / 10)


def small_geometric(stream, n_tx=8, n_rx=4, n_ris=8, tx_rows=2, rx_rows=None, ris_rows=2, seed=11):
    return generate_channel_set(RngStream(seed, stream),
                                desk_scenario(n_tx, n_rx, n_ris, tx_rows=tx_rows, rx_rows=rx_rows, ris_rows=ris_rows))


def small_rayleigh(stream, n_tx=4, n_rx=3, n_ris=4, seed=3):
    return rayleigh_channel_set(RngStream(seed, stream), n_tx, n_rx, n_ris, 1.0, 1.0)


def random_precoder(gen, n_tx, n_s, scale=None):
    F = gen.standard_normal((n_tx, n_s)) + 1j * gen.standard_normal((n_tx, n_s))
    scale = gen.uniform(0.3, 1.0) if scale is None else scale
    return F * (np.sqrt(n_s) * scale / np.linalg.norm(F))


def random_weights(gen, n_ris, m):
    T = gen.random((n_ris, m)) + 0.05
    return T / T.sum(axis=1, keepdims=True)


def tiny_instance(stream, seed=7):
    """N_tx=4, N_rx=2, N_ris=6 on the geometric model: 2^6 = 64 one-bit configurations."""
    return small_geometric(stream, n_tx=4, n_rx=2, n_ris=6, tx_rows=None, rx_rows=1, ris_rows=2, seed=seed)
