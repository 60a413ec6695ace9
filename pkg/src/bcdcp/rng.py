"""Counter-based random streams.

Every path gets its own stream keyed by ``(seed, path_index)``.  A stream is a
SplitMix64 sequence: the i-th output is ``mix(key + i * GOLDEN)``, so draws
depend only on the key and the counter, never on scheduling.  The compiled
kernel implements the same arithmetic with native 64-bit integers.
"""

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
PATH_STRIDE = 0xD1B54A32D192ED03
INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_key(seed, path_index):
    base = mix64((seed + GOLDEN) & MASK)
    return mix64((base + path_index * PATH_STRIDE) & MASK)


class Stream:
    """Uniform draws on the open interval (0, 1) from one keyed substream."""

    __slots__ = ("key", "counter")

    def __init__(self, seed=0, path_index=0, counter=0):
        self.key = stream_key(int(seed), int(path_index))
        self.counter = counter

    def next_u64(self):
        self.counter += 1
        return mix64((self.key + self.counter * GOLDEN) & MASK)

    def uniform(self):
        return ((self.next_u64() >> 11) + 0.5) * INV_2_53


class FixedStream:
    """Replays a given list of uniforms; handy for pinning a sampler in tests."""

    def __init__(self, values):
        self._values = list(values)
        self._pos = 0

    def uniform(self):
        value = self._values[self._pos]
        self._pos += 1
        return value
