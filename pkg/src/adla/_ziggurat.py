"""Tables and seeding helpers shared by the compiled and numpy samplers.

Both backends draw standard normals with the 256-layer Marsaglia-Tsang
ziggurat on top of xoshiro256**, so a given (seed, draw index) produces the
same stream regardless of which backend is active.
"""
import math

import numpy as np

ZIGGURAT_R = 3.6541528853610088
ZIGGURAT_V = 0.00492867323399

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _build_tables():
    m = 2.0 ** 52
    ki = np.zeros(256, dtype=np.uint64)
    wi = np.zeros(256, dtype=np.float64)
    fi = np.zeros(256, dtype=np.float64)

    dn = tn = ZIGGURAT_R
    q = ZIGGURAT_V / math.exp(-0.5 * dn * dn)
    ki[0] = int((dn / q) * m)
    ki[1] = 0
    wi[0] = q / m
    wi[255] = dn / m
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(ZIGGURAT_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = int((dn / tn) * m)
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / m
    return ki, wi, fi


KI, WI, FI = _build_tables()


def mix64(z):
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def seed_key(seed):
    """Reduce an arbitrary non-negative integer seed to 64 bits."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = 0
    while True:
        key = mix64(key ^ (seed & MASK64))
        seed >>= 64
        if not seed:
            return key


def stream_state(key, index):
    """xoshiro256** state for stream ``index`` under ``key`` (pure Python)."""
    z = mix64((key + mix64(index + 1)) & MASK64)
    state = []
    for _ in range(4):
        z = (z + GOLDEN) & MASK64
        state.append(mix64(z))
    return state
