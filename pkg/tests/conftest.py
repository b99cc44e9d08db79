import numpy as np
import pytest

from prosody_units.audio import Waveform


def make_sine(freq, duration=1.0, sr=16000, amp=0.8):
    t = np.arange(int(duration * sr)) / sr
    return Waveform(samples=amp * np.sin(2 * np.pi * freq * t), sample_rate=sr)


def make_sawtooth(freq, duration=1.0, sr=16000, amp=0.8):
    t = np.arange(int(duration * sr)) / sr
    phase = (t * freq) % 1.0
    return Waveform(samples=amp * (2.0 * phase - 1.0), sample_rate=sr)


def make_silence(duration=1.0, sr=16000):
    return Waveform(samples=np.zeros(int(duration * sr)), sample_rate=sr)


@pytest.fixture
def sine_220():
    return make_sine(220.0)
