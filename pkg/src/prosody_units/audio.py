"""Waveform container and 16-bit PCM mono WAV I/O."""

import wave
from dataclasses import dataclass

import numpy as np

from prosody_units.ioutil import atomic_write


@dataclass
class Waveform:
    """Mono audio samples in [-1, 1] at an integer sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be 1-D (mono)")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.samples.size and np.abs(self.samples).max() > 1.0 + 1e-9:
            raise ValueError("samples must lie in [-1, 1]")
        self.sample_rate = int(self.sample_rate)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size


def read_wav(path):
    """Read a 16-bit PCM mono WAV file."""
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono, got {wf.getnchannels()} channels")
        if wf.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM")
        sr = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    return Waveform(samples=pcm / 32768.0, sample_rate=sr)


def write_wav(path, wave_out):
    """Write a Waveform as 16-bit PCM mono, clipping to full scale."""
    pcm = np.clip(np.round(wave_out.samples * 32767.0), -32768, 32767).astype("<i2")
    with atomic_write(path, mode="wb") as fh:
        with wave.open(fh, "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(wave_out.sample_rate)
            wf.writeframes(pcm.tobytes())
