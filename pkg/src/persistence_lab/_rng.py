"""Deterministic random-stream derivation.

Every Monte Carlo routine in the package draws from substreams derived
here.  A substream is addressed by a master seed plus a path of integers
or strings (subcommand, point index, trial index).  The derivation is a
pure function of (master_seed, path), so results are reproducible across
runs, platforms and worker counts.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _path_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream path parts must be int or str, got {type(part)!r}")


def stream_seed(master_seed: int, *path) -> np.random.SeedSequence:
    """Hash (master_seed, *path) into a SeedSequence."""
    words = [int(master_seed) & _MASK64] + [_path_word(p) for p in path]
    return np.random.SeedSequence(words)


def substream(master_seed: int, *path) -> np.random.Generator:
    """Independent PCG64 generator for the given stream path."""
    return np.random.Generator(np.random.PCG64(stream_seed(master_seed, *path)))
