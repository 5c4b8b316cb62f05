"""Deterministic per-cell seed derivation.

``cell_seed(master, day_ordinal, hour)`` is defined bit-exactly as::

    s = splitmix64(master mod 2**64)
    s = splitmix64(s ^ day_ordinal)
    s = splitmix64(s ^ hour)

where ``day_ordinal`` is the proleptic Gregorian ordinal of the delivery
date (``datetime.date.toordinal``) and ``splitmix64`` is the finaliser of
Steele, Lea and Flood's SplitMix64 generator::

    z = (x + 0x9E3779B97F4A7C15) mod 2**64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    return z ^ (z >> 31)

The result depends only on its arguments, never on scheduling.
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def cell_seed(master_seed: int, day_ordinal: int, hour: int) -> int:
    s = splitmix64(int(master_seed) & MASK64)
    s = splitmix64(s ^ (int(day_ordinal) & MASK64))
    return splitmix64(s ^ (int(hour) & MASK64))
