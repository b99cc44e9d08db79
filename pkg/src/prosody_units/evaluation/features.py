"""Six acoustic expressivity descriptors used for distance analysis.

Per-frame measures are smoothed with a 3-frame moving average before the
utterance-level functionals: spectral slope 500-1500 Hz averaged over
unvoiced frames, spectral slope 0-500 Hz averaged over voiced frames, the
standard deviation of rising F0 slopes (semitones from 27.5 Hz), mean F1
bandwidth from LPC pole radii, mean H1-H2 (dB gap of the first two harmonic
magnitudes), and the coefficient of variation of MFCC 4 over voiced frames.
Functionals over an empty frame set fall back to 0.
"""

import csv
from dataclasses import dataclass, fields

import numpy as np

from prosody_units.ioutil import atomic_write

FEATURE_NAMES = (
    "slopeUV_500_1500_mean",
    "slopeV_0_500_mean",
    "f0_semitone_risingslope_std",
    "f1_bandwidth_mean",
    "h1_h2_mean",
    "mfcc4_voiced_stdnorm",
)

LPC_ORDER = 12
N_MELS = 26
MFCC_INDEX = 4
F1_RANGE = (90.0, 1000.0)


@dataclass
class FeatureVector:
    slope_uv_500_1500_mean: float
    slope_v_0_500_mean: float
    f0_semitone_risingslope_std: float
    f1_bandwidth_mean: float
    h1_h2_mean: float
    mfcc4_voiced_stdnorm: float

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
            setattr(self, f.name, v)

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (6,):
            raise ValueError("feature vector must have 6 entries")
        return cls(*values.tolist())


def _hann(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _band_slope(db, freqs_khz, lo_hz, hi_hz):
    """Least-squares slope of dB magnitude vs kHz inside [lo_hz, hi_hz]."""
    sel = (freqs_khz * 1000.0 >= lo_hz) & (freqs_khz * 1000.0 <= hi_hz)
    x = freqs_khz[sel]
    y = db[sel]
    if x.size < 2:
        return 0.0
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom == 0.0:
        return 0.0
    return float(np.dot(xc, y - y.mean()) / denom)


def _levinson(r, order):
    """Levinson-Durbin; returns A(z) coefficients [1, a1, .., ap] or None."""
    if r[0] <= 0.0:
        return None
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][: i]
        err *= 1.0 - k * k
        if err <= 0.0:
            return None
    return a


def _f1_bandwidth(frame, sr):
    """Bandwidth of the lowest LPC pole in the F1 range, or NaN."""
    pre = np.empty_like(frame)
    pre[0] = frame[0]
    pre[1:] = frame[1:] - 0.97 * frame[:-1]
    w = pre * _hann(pre.size)
    r = np.correlate(w, w, mode="full")[w.size - 1 : w.size + LPC_ORDER]
    if r[0] < 1e-12:
        return np.nan
    a = _levinson(r, LPC_ORDER)
    if a is None:
        return np.nan
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 1e-9]
    if roots.size == 0:
        return np.nan
    freqs = np.angle(roots) * sr / (2.0 * np.pi)
    radii = np.abs(roots)
    order = np.argsort(freqs)
    for idx in order:
        f = freqs[idx]
        if F1_RANGE[0] <= f <= F1_RANGE[1] and radii[idx] < 1.0:
            return float(-np.log(radii[idx]) * sr / np.pi)
    return np.nan


def _peak_in(mag, freqs, lo, hi):
    sel = (freqs >= lo) & (freqs <= hi)
    return float(mag[sel].max()) if np.any(sel) else 0.0


def _mel_filterbank(n_mels, n_fft_bins, sr):
    def to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    freqs = np.linspace(0.0, sr / 2.0, n_fft_bins)
    points = from_mel(np.linspace(to_mel(0.0), to_mel(sr / 2.0), n_mels + 2))
    bank = np.zeros((n_mels, n_fft_bins))
    for m in range(n_mels):
        left, center, right = points[m], points[m + 1], points[m + 2]
        up = (freqs - left) / max(center - left, 1e-9)
        down = (right - freqs) / max(right - center, 1e-9)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def _dct_matrix(n_out, n_in):
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.sqrt(2.0 / n_in) * np.cos(np.pi * k * (2 * n + 1) / (2.0 * n_in))
    mat[0] /= np.sqrt(2.0)
    return mat


def _smooth3(values, valid):
    """3-frame moving average over valid entries; invalid stay NaN."""
    out = np.full_like(values, np.nan)
    n = values.size
    for i in np.flatnonzero(valid):
        lo, hi = max(0, i - 1), min(n, i + 2)
        window = values[lo:hi][valid[lo:hi]]
        out[i] = window.mean()
    return out


def _rising_slopes(semitones, voiced, frame_period):
    """Slopes of maximal strictly-rising runs inside voiced segments."""
    slopes = []
    i = 0
    n = semitones.size
    while i < n:
        if not voiced[i] or not np.isfinite(semitones[i]):
            i += 1
            continue
        j = i
        while (
            j + 1 < n
            and voiced[j + 1]
            and np.isfinite(semitones[j + 1])
            and semitones[j + 1] > semitones[j]
        ):
            j += 1
        if j > i:
            slopes.append((semitones[j] - semitones[i]) / ((j - i) * frame_period))
            i = j
        else:
            i += 1
    return np.array(slopes)


def extract_features(wave, track):
    """Compute the six-feature vector for one time-aligned (wave, track) pair."""
    sr = wave.sample_rate
    hop = int(round(track.frame_period * sr))
    n = len(track)
    if hop < 1 or len(wave) // hop != n:
        raise ValueError(
            f"misaligned inputs: waveform has {len(wave) // max(hop, 1)} frames, "
            f"track has {n}"
        )
    if n == 0:
        return FeatureVector(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    win_len = 2 * hop
    n_fft = 1
    while n_fft < 2 * win_len:
        n_fft *= 2
    window = _hann(win_len)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    freqs_khz = freqs / 1000.0
    padded = np.concatenate((wave.samples, np.zeros(win_len)))

    voiced = track.voiced
    slope_uv = np.full(n, np.nan)
    slope_v = np.full(n, np.nan)
    semitone = np.full(n, np.nan)
    f1bw = np.full(n, np.nan)
    h1h2 = np.full(n, np.nan)
    mfcc4 = np.full(n, np.nan)

    mel_bank = _mel_filterbank(N_MELS, freqs.size, sr)
    dct = _dct_matrix(MFCC_INDEX + 1, N_MELS)

    for t in range(n):
        frame = padded[t * hop : t * hop + win_len]
        mag = np.abs(np.fft.rfft(frame * window, n_fft))
        db = 20.0 * np.log10(mag + 1e-12)
        if voiced[t]:
            slope_v[t] = _band_slope(db, freqs_khz, 0.0, 500.0)
            f0 = track.f0_hz[t]
            semitone[t] = 12.0 * np.log2(f0 / 27.5)
            f1bw[t] = _f1_bandwidth(frame, sr)
            h1 = _peak_in(mag, freqs, 0.75 * f0, 1.25 * f0)
            h2 = _peak_in(mag, freqs, 1.75 * f0, 2.25 * f0)
            h1h2[t] = 20.0 * np.log10((h1 + 1e-12) / max(h2, h1 * 1e-6, 1e-12))
            energies = mel_bank @ (mag * mag)
            mfcc4[t] = (dct @ np.log(energies + 1e-12))[MFCC_INDEX]
        else:
            slope_uv[t] = _band_slope(db, freqs_khz, 500.0, 1500.0)

    unvoiced = ~voiced
    slope_uv = _smooth3(slope_uv, unvoiced)
    slope_v = _smooth3(slope_v, voiced)
    semitone = _smooth3(semitone, voiced)
    f1bw = _smooth3(f1bw, voiced & np.isfinite(f1bw))
    h1h2 = _smooth3(h1h2, voiced)
    mfcc4 = _smooth3(mfcc4, voiced)

    def mean_or_zero(values, mask):
        sel = values[mask & np.isfinite(values)]
        return float(sel.mean()) if sel.size else 0.0

    slopes = _rising_slopes(semitone, voiced, track.frame_period)
    rising_std = float(slopes.std()) if slopes.size else 0.0

    mfcc_sel = mfcc4[voiced & np.isfinite(mfcc4)]
    if mfcc_sel.size and abs(mfcc_sel.mean()) > 1e-12:
        mfcc_stdnorm = float(mfcc_sel.std() / abs(mfcc_sel.mean()))
    else:
        mfcc_stdnorm = 0.0

    return FeatureVector(
        slope_uv_500_1500_mean=mean_or_zero(slope_uv, unvoiced),
        slope_v_0_500_mean=mean_or_zero(slope_v, voiced),
        f0_semitone_risingslope_std=rising_std,
        f1_bandwidth_mean=mean_or_zero(f1bw, voiced),
        h1_h2_mean=mean_or_zero(h1h2, voiced),
        mfcc4_voiced_stdnorm=mfcc_stdnorm,
    )


# ---------------------------------------------------------------------------
# Feature table CSV
# ---------------------------------------------------------------------------


def write_feature_csv(path, rows):
    """Rows of (utterance_id, FeatureVector) under the documented header."""
    with atomic_write(path) as fh:
        fh.write("utterance_id," + ",".join(FEATURE_NAMES) + "\n")
        for utt_id, vec in rows:
            vals = ",".join(repr(v) for v in vec.as_array().tolist())
            fh.write(f"{utt_id},{vals}\n")


def read_feature_csv(path):
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURE_NAMES) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing feature columns {sorted(missing)}")
        for row in reader:
            out[row["utterance_id"]] = FeatureVector(
                *(float(row[name]) for name in FEATURE_NAMES)
            )
    return out
