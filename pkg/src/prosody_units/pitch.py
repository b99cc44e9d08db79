"""F0 tracking, per-speaker normalization and bin quantization.

The tracker follows the YAAPT family's time-domain core: normalized
cross-correlation (NCCF) candidate generation per frame, then dynamic
programming over candidates with costs built from candidate merit, an
octave bias toward shorter lags, and inter-frame transition penalties.
Voicing falls out of the merit threshold that prices the unvoiced state.

Quantization maps speaker-normalized F0 onto `d` equal bins over a fixed
range; decoding takes the weighted average of activated bin centers and
denormalizes with the speaker statistics.
"""

import csv
from dataclasses import dataclass

import numpy as np

from prosody_units.ioutil import atomic_write

STD_FLOOR = 1e-5
DECODE_CUTOFF = 0.1  # activations below this count as silence


@dataclass
class TrackerConfig:
    f_min: float = 60.0
    f_max: float = 400.0
    frame_period: float = 0.020
    voicing_threshold: float = 0.45
    # DP weights; defaults tuned on clean synthetic signals.
    n_candidates: int = 8
    octave_cost: float = 0.05
    jump_cost: float = 0.35
    switch_cost: float = 0.20


@dataclass
class PitchTrack:
    """Per-frame F0 in Hz with voicing flags; f0 is 0 exactly when unvoiced."""

    f0_hz: np.ndarray
    voiced: np.ndarray
    frame_period: float = 0.020

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if self.f0_hz.shape != self.voiced.shape or self.f0_hz.ndim != 1:
            raise ValueError("f0_hz and voiced must be 1-D of equal length")
        if np.any(self.f0_hz < 0):
            raise ValueError("f0 must be non-negative")
        if np.any((self.f0_hz > 0) != self.voiced):
            raise ValueError("f0 > 0 must coincide with voiced flags")
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")

    def __len__(self):
        return self.f0_hz.size


@dataclass
class SpeakerPitchStats:
    speaker_id: str
    mean_hz: float
    std_hz: float
    n_voiced: int

    def __post_init__(self):
        if self.n_voiced < 1:
            raise ValueError("n_voiced must be >= 1")
        if self.std_hz < STD_FLOOR:
            raise ValueError(f"std_hz must be >= {STD_FLOOR}")


@dataclass
class PitchQuantizer:
    """d equal-width bins over the normalized-F0 interval [lo, hi]."""

    d: int = 32
    lo: float = -3.0
    hi: float = 3.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not self.lo < self.hi:
            raise ValueError("lo must be < hi")

    @property
    def bin_width(self):
        return (self.hi - self.lo) / self.d

    @property
    def bin_centers(self):
        j = np.arange(self.d)
        return self.lo + (j + 0.5) * self.bin_width


# ---------------------------------------------------------------------------
# Tracking
# ---------------------------------------------------------------------------


def _frame_candidates(segment, n_corr, lag_min, lag_max, n_candidates):
    """NCCF peaks of one analysis segment as (lag, merit) pairs."""
    seg = segment - segment.mean()
    e0 = float(np.dot(seg[:n_corr], seg[:n_corr]))
    if e0 < 1e-9 * n_corr:
        return []
    numer = np.correlate(seg, seg[:n_corr], mode="valid")
    csum = np.concatenate(([0.0], np.cumsum(seg * seg)))
    e_lag = csum[n_corr : n_corr + numer.size] - csum[: numer.size]
    nccf = numer / np.sqrt(e0 * e_lag + 1e-20)

    cands = []
    for k in range(max(lag_min, 1), min(lag_max, nccf.size - 1) + 1):
        y0, y1, y2 = nccf[k - 1], nccf[k], nccf[k + 1]
        if y1 > y0 and y1 >= y2 and y1 > 0.0:
            denom = y0 - 2.0 * y1 + y2
            delta = 0.0 if denom >= -1e-12 else 0.5 * (y0 - y2) / denom
            delta = float(np.clip(delta, -0.5, 0.5))
            lag = k + delta
            merit = min(1.0, float(y1 - 0.25 * (y0 - y2) * delta))
            cands.append((lag, merit))
    cands.sort(key=lambda c: -c[1])
    return cands[:n_candidates]


def track_f0(wave, cfg=None):
    """Track F0 with NCCF candidates and DP path selection.

    Returns one frame per `cfg.frame_period`; voiced frames carry f0 inside
    [f_min, f_max], unvoiced frames carry 0.
    """
    cfg = cfg or TrackerConfig()
    sr = wave.sample_rate
    if sr < 8000:
        raise ValueError("sample_rate must be >= 8000 for pitch tracking")
    if not 0 < cfg.f_min < cfg.f_max < sr / 2:
        raise ValueError("invalid pitch range: need 0 < f_min < f_max < sr/2")
    hop = int(round(cfg.frame_period * sr))
    n_frames = wave.samples.size // hop
    if n_frames < 2:
        raise ValueError("waveform too short: need at least 2 frames")

    lag_min = max(2, int(np.floor(sr / cfg.f_max)))
    lag_max = int(np.ceil(sr / cfg.f_min))
    n_corr = lag_max  # correlation window spans one period of f_min
    seg_len = n_corr + lag_max + 1
    padded = np.concatenate((wave.samples, np.zeros(seg_len)))

    candidates = []
    for t in range(n_frames):
        start = t * hop
        candidates.append(
            _frame_candidates(
                padded[start : start + seg_len],
                n_corr,
                lag_min,
                lag_max,
                cfg.n_candidates,
            )
        )

    f0, voiced = _dp_select(candidates, sr, cfg)
    f0 = np.where(voiced, np.clip(f0, cfg.f_min, cfg.f_max), 0.0)
    return PitchTrack(f0_hz=f0, voiced=voiced, frame_period=cfg.frame_period)


def _dp_select(candidates, sr, cfg):
    """Viterbi over per-frame candidates plus an unvoiced state.

    Local cost of a voiced candidate is (1 - merit) plus an octave bias that
    favors shorter lags when merits tie (harmonic sub-multiples correlate as
    well as the true period).  The unvoiced state costs (1 - threshold), so
    frames whose best merit clears the threshold prefer a voiced state.
    """
    n = len(candidates)
    states = []  # per frame: list of (f0, local_cost); f0 = 0 for unvoiced
    for cands in candidates:
        frame_states = [(0.0, 1.0 - cfg.voicing_threshold)]
        for lag, merit in cands:
            bias = cfg.octave_cost * np.log2(cfg.f_min * lag / sr)
            frame_states.append((sr / lag, 1.0 - merit + bias))
        states.append(frame_states)

    cost = [np.array([c for _, c in states[0]])]
    back = []
    for t in range(1, n):
        prev_f0 = np.array([f for f, _ in states[t - 1]])
        prev_cost = cost[-1]
        cur_cost = np.empty(len(states[t]))
        cur_back = np.empty(len(states[t]), dtype=np.int64)
        for j, (f0j, local) in enumerate(states[t]):
            trans = np.empty(prev_f0.size)
            for i, f0i in enumerate(prev_f0):
                if f0i == 0.0 and f0j == 0.0:
                    trans[i] = 0.0
                elif f0i == 0.0 or f0j == 0.0:
                    trans[i] = cfg.switch_cost
                else:
                    trans[i] = cfg.jump_cost * abs(np.log2(f0j / f0i))
            total = prev_cost + trans
            best = int(np.argmin(total))
            cur_cost[j] = total[best] + local
            cur_back[j] = best
        cost.append(cur_cost)
        back.append(cur_back)

    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    j = int(np.argmin(cost[-1]))
    for t in range(n - 1, -1, -1):
        fj = states[t][j][0]
        f0[t] = fj
        voiced[t] = fj > 0.0
        if t > 0:
            j = int(back[t - 1][j])
    return f0, voiced


# ---------------------------------------------------------------------------
# Speaker statistics and normalization
# ---------------------------------------------------------------------------


def speaker_stats(tracks, speaker_id):
    """Population mean/std of voiced F0 across a speaker's tracks."""
    if isinstance(tracks, PitchTrack):
        tracks = [tracks]
    voiced_f0 = np.concatenate([t.f0_hz[t.voiced] for t in tracks]) if tracks else np.empty(0)
    if voiced_f0.size == 0:
        raise ValueError(f"no voiced speech for speaker {speaker_id!r}")
    mean = float(voiced_f0.mean())
    std = max(float(voiced_f0.std()), STD_FLOOR)
    return SpeakerPitchStats(
        speaker_id=speaker_id, mean_hz=mean, std_hz=std, n_voiced=int(voiced_f0.size)
    )


def normalize_f0(track, stats):
    """Per-speaker z-score of voiced frames; unvoiced frames become NaN."""
    out = np.full(len(track), np.nan)
    v = track.voiced
    out[v] = (track.f0_hz[v] - stats.mean_hz) / stats.std_hz
    return out


def denormalize_f0(values, stats):
    """Invert `normalize_f0`; NaN stays NaN."""
    return np.asarray(values, dtype=np.float64) * stats.std_hz + stats.mean_hz


# ---------------------------------------------------------------------------
# Bin quantization
# ---------------------------------------------------------------------------


def f0_to_bins(value, quantizer):
    """One-hot encode a normalized value into its half-open bin [left, right).

    Values outside [lo, hi] clamp to the extreme bins.
    """
    q = quantizer
    idx = int(np.floor((value - q.lo) / q.bin_width))
    idx = min(max(idx, 0), q.d - 1)
    out = np.zeros(q.d)
    out[idx] = 1.0
    return out


def bins_to_f0(activation, quantizer, stats):
    """Weighted average of activated bin centers, denormalized to Hz.

    Activations below DECODE_CUTOFF are treated as silence; if none survives
    the cutoff the frame is unvoiced and 0.0 is returned.
    """
    a = np.asarray(activation, dtype=np.float64)
    if a.shape != (quantizer.d,):
        raise ValueError(f"activation must have shape ({quantizer.d},)")
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("activations must lie in [0, 1]")
    mask = a >= DECODE_CUTOFF
    if not np.any(mask):
        return 0.0
    centers = quantizer.bin_centers
    normalized = float(np.dot(a[mask], centers[mask]) / a[mask].sum())
    return float(normalized * stats.std_hz + stats.mean_hz)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def write_f0_csv(path, track):
    """CSV "time_s,f0_hz,voiced", one row per frame."""
    with atomic_write(path) as fh:
        fh.write("time_s,f0_hz,voiced\n")
        for i in range(len(track)):
            t = i * track.frame_period
            fh.write(f"{t:.6f},{track.f0_hz[i]:.6f},{int(track.voiced[i])}\n")


def read_f0_csv(path):
    times, f0, voiced = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            times.append(float(row["time_s"]))
            f0.append(float(row["f0_hz"]))
            voiced.append(bool(int(row["voiced"])))
    period = times[1] - times[0] if len(times) > 1 else 0.020
    return PitchTrack(
        f0_hz=np.array(f0),
        voiced=np.array(voiced, dtype=bool),
        frame_period=round(period, 9),
    )


def write_speaker_stats_csv(path, stats_list):
    if isinstance(stats_list, SpeakerPitchStats):
        stats_list = [stats_list]
    with atomic_write(path) as fh:
        fh.write("speaker_id,mean_hz,std_hz,n_voiced\n")
        for s in stats_list:
            fh.write(f"{s.speaker_id},{s.mean_hz!r},{s.std_hz!r},{s.n_voiced}\n")


def read_speaker_stats_csv(path):
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out[row["speaker_id"]] = SpeakerPitchStats(
                speaker_id=row["speaker_id"],
                mean_hz=float(row["mean_hz"]),
                std_hz=float(row["std_hz"]),
                n_voiced=int(row["n_voiced"]),
            )
    return out
