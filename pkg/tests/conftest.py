import random

import pytest

from kmperiod.sketch import Epoch


def random_text(rng: random.Random, n: int, alphabet: bytes = b"ab") -> bytes:
    return bytes(rng.choice(alphabet) for _ in range(n))


def noisy_power(rng: random.Random, block: bytes, n: int, edits: int, alphabet: bytes = b"ab") -> bytes:
    out = bytearray((block * (n // len(block) + 1))[:n])
    for _ in range(edits):
        out[rng.randrange(n)] = rng.choice(alphabet)
    return bytes(out)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def epoch():
    return Epoch(7)
