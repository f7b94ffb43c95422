"""Reproducible substreams derived from one master seed.

Every random draw in a run comes from a substream keyed by a tuple of
non-negative integers, for example ``(PROTOCOL, replicate, roi_key(roi))``.
The key is passed to :class:`numpy.random.SeedSequence` as its spawn key, so
substreams are statistically independent and a given key always yields the
same stream regardless of scheduling or of which other keys exist.
"""
from __future__ import annotations

import zlib
from typing import Iterable, Mapping

import numpy as np

# first element of every key; separates the purposes a stream is used for
PROTOCOL = 1
POWER = 2


def roi_key(roi_id: str) -> int:
    """Stable 32-bit key for an ROI identifier (CRC-32 of its UTF-8 bytes)."""
    return zlib.crc32(roi_id.encode("utf-8"))


def substream(master_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def roi_streams(master_seed: int, roi_ids: Iterable[str], *key: int) -> Mapping[str, np.random.Generator]:
    return {roi: substream(master_seed, *key, roi_key(roi)) for roi in roi_ids}
