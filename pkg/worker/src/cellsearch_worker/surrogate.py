"""Closed-form fitness surface with noise keyed by candidate and seed.

The client caches results and reorders work across workers, so noise must
not depend on draw order or process identity.  The recipe here is part of
the wire contract: hash "<seed>:<conv>:<dense>" with blake2b (8-byte
digest), interpret the digest big-endian, seed a fresh random.Random with
it, and take a single gauss(0, 1) draw scaled by the noise level.  Any
implementation that follows it agrees with every other, bit for bit.
"""

import hashlib
import random

DEFAULT_PEAK = 0.86
DEFAULT_OPTIMUM = (2, 2)
DEFAULT_CURVATURE = (0.01, 0.01)


def candidate_noise(conv: int, dense: int, seed: int, sd: float) -> float:
    if sd == 0.0:
        return 0.0
    key = f"{seed}:{conv}:{dense}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big")).gauss(0.0, 1.0) * sd


def fitness(
    conv: int,
    dense: int,
    seed: int,
    peak: float = DEFAULT_PEAK,
    optimum: tuple[int, int] = DEFAULT_OPTIMUM,
    curvature: tuple[float, float] = DEFAULT_CURVATURE,
    noise_sd: float = 0.0,
) -> float:
    a, b = curvature
    value = peak - a * (conv - optimum[0]) ** 2 - b * (dense - optimum[1]) ** 2
    return value + candidate_noise(conv, dense, seed, noise_sd)
