"""16-bit PCM mono WAV reading and writing."""

from __future__ import annotations

import os
import wave
from pathlib import Path

import numpy as np

from .signal_model import Signal

FULL_SCALE = 32767


def write_wav(path, sig: Signal) -> None:
    """Write ``sig`` as little-endian 16-bit PCM mono.

    Samples are clipped to [-1, 1] and rounded to the nearest code, so a
    round trip is exact to within half a quantization step.  The file is
    written to a temporary name first and renamed into place.
    """
    path = Path(path)
    codes = np.round(np.clip(sig.samples, -1.0, 1.0) * FULL_SCALE).astype("<i2")
    tmp = path.with_name(path.name + ".part")
    with wave.open(str(tmp), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sig.sample_rate_hz)
        w.writeframes(codes.tobytes())
    os.replace(tmp, path)


def read_wav(path) -> Signal:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getcomptype() != "NONE":
                raise ValueError(f"{path}: compressed WAV is not supported")
            if w.getsampwidth() != 2:
                raise ValueError(f"{path}: expected 16-bit samples, got {8 * w.getsampwidth()}-bit")
            if w.getnchannels() != 1:
                raise ValueError(f"{path}: expected mono, got {w.getnchannels()} channels")
            rate = w.getframerate()
            n = w.getnframes()
            raw = w.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise ValueError(f"{path}: not a readable WAV file ({exc or type(exc).__name__})") from exc
    if len(raw) != 2 * n or n == 0:
        raise ValueError(f"{path}: truncated or empty sample data")
    codes = np.frombuffer(raw, dtype="<i2")
    return Signal(codes.astype(float) / FULL_SCALE, rate)
