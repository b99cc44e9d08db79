"""Conditioning matrix assembly and a toy harmonic+noise synthesizer.

The matrix layout is fixed: per frame row = [unit embedding (E) | f0 (1) |
emotion (96) | speaker (S)].  The synthesizer stands in for a neural vocoder:
voiced frames emit a phase-continuous stack of up to 8 harmonics whose
amplitudes derive from the unit-embedding block, unvoiced frames emit
low-level noise, and 50%-overlapped Hann windows join the frames.
"""

from dataclasses import dataclass

import numpy as np

from prosody_units.audio import Waveform
from prosody_units.ioutil import atomic_write
from prosody_units.predictors import EMO_DIM, _emo_values

N_HARMONICS = 8
NOISE_AMP = 0.01  # unvoiced noise level, about -40 dBFS
MASTER_GAIN = 0.6


@dataclass
class ConditioningMatrix:
    """(T, E + 1 + 96 + S) float32 matrix; stored exactly by the CND1 format."""

    data: np.ndarray
    emb_dim: int
    spk_dim: int
    frame_period: float = 0.020

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        expected = self.emb_dim + 1 + EMO_DIM + self.spk_dim
        if self.data.ndim != 2 or self.data.shape[1] != expected:
            raise ValueError(
                f"conditioning matrix must have {expected} columns, "
                f"got shape {self.data.shape}"
            )
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")
        if self.data.shape[0]:
            if np.any(self.f0_column < 0):
                raise ValueError("f0 column must be non-negative")
            for name, block in (("emotion", self.emotion_block), ("speaker", self.speaker_block)):
                if block.shape[1] and not np.all(block == block[0]):
                    raise ValueError(f"{name} block must be identical in every row")

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def unit_block(self):
        return self.data[:, : self.emb_dim]

    @property
    def f0_column(self):
        return self.data[:, self.emb_dim]

    @property
    def emotion_block(self):
        return self.data[:, self.emb_dim + 1 : self.emb_dim + 1 + EMO_DIM]

    @property
    def speaker_block(self):
        return self.data[:, self.emb_dim + 1 + EMO_DIM :]


def interpolate_f0(track, target_rate):
    """Resample an F0 track to `target_rate` frames per second.

    Linear interpolation runs along the time axis inside voiced runs; output
    positions bracketed by any unvoiced frame stay 0 rather than ramping
    toward silence.  The first and last samples are preserved exactly, and a
    target rate equal to the source rate returns the input unchanged.
    """
    n = len(track)
    if n == 0:
        raise ValueError("empty track")
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    duration = n * track.frame_period
    m = int(round(duration * target_rate))
    if m <= 0:
        m = 1
    if m == 1 or n == 1:
        return np.full(m, track.f0_hz[0] if track.voiced[0] else 0.0)

    # Source index positions of the output samples, endpoints pinned.
    x = np.arange(m) * (n - 1) / (m - 1)
    lo = np.floor(x).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = x - lo
    f0 = track.f0_hz
    values = (1.0 - frac) * f0[lo] + frac * f0[hi]
    # A sample landing on a source frame takes that frame's voicing; between
    # frames both neighbours must be voiced, otherwise the gap stays at 0.
    on_lo = frac < 1e-9
    on_hi = frac > 1.0 - 1e-9
    voiced = track.voiced
    keep = np.where(
        on_lo, voiced[lo], np.where(on_hi, voiced[hi], voiced[lo] & voiced[hi])
    )
    return np.where(keep, values, 0.0)


def assemble_conditioning(units, unit_emb, f0, emo, spk, frame_period=None):
    """Concatenate per-frame unit embeddings, f0, emotion and speaker vectors.

    The emotion and speaker vectors are replicated along the time axis; units
    and f0 must already share one frame rate.
    """
    ids = np.asarray(getattr(units, "units", units), dtype=np.int64)
    f0 = np.asarray(f0, dtype=np.float64)
    if ids.ndim != 1 or f0.ndim != 1 or ids.size != f0.size:
        raise ValueError(
            f"unaligned streams: {ids.size} units vs {f0.size} f0 frames"
        )
    unit_emb = np.asarray(unit_emb, dtype=np.float64)
    if ids.size and (ids.max() >= unit_emb.shape[0] or ids.min() < 0):
        raise ValueError("unit id out of range for embedding table")
    emo = _emo_values(emo)
    spk = np.asarray(spk, dtype=np.float64).reshape(-1)
    t = ids.size
    if frame_period is None:
        frame_period = getattr(units, "frame_period", 0.020)
    rows = np.concatenate(
        (
            unit_emb[ids],
            f0[:, None],
            np.broadcast_to(emo, (t, EMO_DIM)),
            np.broadcast_to(spk, (t, spk.size)),
        ),
        axis=1,
    )
    return ConditioningMatrix(
        data=rows,
        emb_dim=unit_emb.shape[1],
        spk_dim=spk.size,
        frame_period=frame_period,
    )


def _harmonic_amplitudes(unit_block):
    """Fixed affine map from unit embeddings to 8 decaying harmonic weights.

    The 1/h^2 envelope keeps the fundamental dominant for any embedding; the
    result is normalized to unit energy per frame.
    """
    e = unit_block.astype(np.float64)
    rng = np.random.default_rng(1234)  # fixed map, not a source of randomness
    w = rng.normal(0.0, 1.0 / np.sqrt(max(1, e.shape[1])), size=(e.shape[1], N_HARMONICS))
    b = rng.normal(0.0, 0.3, size=N_HARMONICS)
    shaped = 1.0 + 0.5 * np.tanh(e @ w + b)
    shaped /= np.arange(1, N_HARMONICS + 1) ** 2
    norm = np.linalg.norm(shaped, axis=1, keepdims=True)
    return shaped / np.maximum(norm, 1e-12)


def toy_synthesize(cond, sample_rate, noise_seed=0):
    """Render a conditioning matrix to audio with harmonics + noise and OLA.

    Output length is exactly n_frames * hop samples (hop = frame_period *
    sample_rate).  Phase is the cumulative integral of the per-sample f0, so
    voiced runs are click-free.
    """
    sr = int(sample_rate)
    hop = int(round(cond.frame_period * sr))
    if hop < 1:
        raise ValueError("frame_period too small for sample rate")
    t_frames = cond.n_frames
    f0 = cond.f0_column.astype(np.float64)
    if np.any(f0 >= sr / 2):
        raise ValueError("f0 at or above Nyquist")
    total = t_frames * hop
    if t_frames == 0:
        return Waveform(samples=np.zeros(0), sample_rate=sr)

    amps = _harmonic_amplitudes(cond.unit_block)
    voiced = f0 > 0.0

    # Per-sample phase over the padded span (one extra hop for the OLA tail).
    f0_samples = np.repeat(np.concatenate((f0, f0[-1:])), hop)
    phase = 2.0 * np.pi * np.cumsum(f0_samples) / sr

    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(2 * hop) / (2 * hop))
    rng = np.random.default_rng(noise_seed)
    noise = rng.normal(0.0, NOISE_AMP, size=total + hop)

    out = np.zeros(total + hop)
    for t in range(t_frames):
        start = t * hop
        seg = np.zeros(2 * hop)
        if voiced[t]:
            ph = phase[start : start + 2 * hop]
            for h in range(1, N_HARMONICS + 1):
                if h * f0[t] >= sr / 2:
                    break
                seg += amps[t, h - 1] * np.sin(h * ph)
            seg *= MASTER_GAIN
        else:
            seg = noise[start : start + 2 * hop].copy()
        out[start : start + 2 * hop] += window * seg

    # The first half-window lacks an overlap partner; divide its taper back
    # out so the envelope stays flat (Hann pairs elsewhere sum to 1).
    out[:hop] /= np.maximum(window[:hop], 1e-3)
    out = out[:total]
    peak = np.abs(out).max()
    if peak > 1.0:
        out /= peak * 1.0001
    return Waveform(samples=out, sample_rate=sr)


# ---------------------------------------------------------------------------
# CND1 file format
# ---------------------------------------------------------------------------


def write_conditioning(path, cond):
    """Header "CND1 T E S frame_period", then row-major float32 LE data."""
    header = (
        f"CND1 {cond.n_frames} {cond.emb_dim} {cond.spk_dim} "
        f"{cond.frame_period!r}\n"
    )
    with atomic_write(path, mode="wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(cond.data.astype("<f4").tobytes())


def read_conditioning(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 5 or header[0] != "CND1":
            raise ValueError(f"{path}: bad conditioning header")
        t, e, s = int(header[1]), int(header[2]), int(header[3])
        frame_period = float(header[4])
        cols = e + 1 + EMO_DIM + s
        raw = fh.read(4 * t * cols)
        if len(raw) != 4 * t * cols:
            raise ValueError(f"{path}: truncated conditioning file")
    data = np.frombuffer(raw, dtype="<f4").reshape(t, cols)
    return ConditioningMatrix(data=data, emb_dim=e, spk_dim=s, frame_period=frame_period)
