"""Corpus manifests, configuration and staged pipeline orchestration.

A manifest is JSON-lines, one utterance per line.  Configuration is INI-style
key=value under section headers; the PROSODY_UNITS_CONFIG environment
variable may point at a file and CLI flags override file values.  Stages
(units, prosody, synth, eval) read their inputs from a working directory,
write artifacts atomically, record per-utterance failures and keep going.
"""

import configparser
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from prosody_units import audio, conditioning, pitch, predictors, units
from prosody_units.evaluation import bleu as bleu_mod
from prosody_units.ioutil import atomic_write

STAGES = ("units", "prosody", "synth", "eval")


class ConfigError(ValueError):
    """Invalid configuration; aborts a run before any work starts."""


@dataclass
class ManifestRecord:
    utterance_id: str
    audio_path: str
    speaker_id: str
    transcript: str = None
    emotion_label: str = None


@dataclass
class Manifest:
    records: list
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.utterance_id in seen:
                raise ValueError(f"duplicate utterance_id {rec.utterance_id!r}")
            seen.add(rec.utterance_id)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def resolve_audio(self, record):
        path = Path(record.audio_path)
        return path if path.is_absolute() else self.base_dir / path

    def speaker_ids(self):
        return sorted({rec.speaker_id for rec in self.records})


REQUIRED_FIELDS = ("utterance_id", "audio_path", "speaker_id")


def parse_manifest(path):
    path = Path(path)
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON line: {exc}") from None
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            for name in REQUIRED_FIELDS:
                if not obj.get(name):
                    raise ValueError(f"{path}:{lineno}: missing field {name!r}")
            utt = obj["utterance_id"]
            if utt in seen:
                raise ValueError(f"{path}:{lineno}: duplicate utterance_id {utt!r}")
            seen.add(utt)
            records.append(
                ManifestRecord(
                    utterance_id=utt,
                    audio_path=obj["audio_path"],
                    speaker_id=obj["speaker_id"],
                    transcript=obj.get("transcript"),
                    emotion_label=obj.get("emotion_label"),
                )
            )
    return Manifest(records=records, base_dir=path.parent)


@dataclass
class PipelineConfig:
    """Every knob the stages need; defaults are the documented desk-scale set."""

    # unit codec
    k: int = 32
    max_iters: int = 50
    frame_period: float = 0.020
    # pitch tracker
    f_min: float = 60.0
    f_max: float = 400.0
    voicing_threshold: float = 0.45
    # pitch quantizer
    d: int = 32
    lo: float = -3.0
    hi: float = 3.0
    # predictor architecture
    emb_dim: int = 32
    channels: tuple = (64, 64)
    kernel: int = 3
    spk_dim: int = 16
    # training
    learning_rate: float = 0.05
    epochs: int = 60
    batch_size: int = 8
    # misc
    seed: int = 0
    sample_rate: int = 16000
    lowercase: bool = False
    eval_hyp: str = None
    eval_ref: str = None

    def validate(self):
        checks = [
            (self.k >= 1, "k must be >= 1"),
            (self.max_iters >= 1, "max_iters must be >= 1"),
            (self.frame_period > 0, "frame_period must be positive"),
            (0 < self.f_min < self.f_max, "need 0 < f_min < f_max"),
            (self.f_max < self.sample_rate / 2, "f_max must be below Nyquist"),
            (self.d >= 2, "d must be >= 2"),
            (self.lo < self.hi, "need lo < hi"),
            (self.emb_dim >= 1, "emb_dim must be >= 1"),
            (all(c >= 1 for c in self.channels), "channels must be >= 1"),
            (self.kernel % 2 == 1, "kernel must be odd"),
            (self.spk_dim >= 1, "spk_dim must be >= 1"),
            (self.learning_rate >= 0, "learning_rate must be >= 0"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.sample_rate >= 8000, "sample_rate must be >= 8000"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def tracker_config(self):
        return pitch.TrackerConfig(
            f_min=self.f_min,
            f_max=self.f_max,
            frame_period=self.frame_period,
            voicing_threshold=self.voicing_threshold,
        )

    def quantizer(self):
        return pitch.PitchQuantizer(d=self.d, lo=self.lo, hi=self.hi)


_BOOL_KEYS = {"lowercase"}
_STR_KEYS = {"eval_hyp", "eval_ref"}


def _coerce(name, raw, kind):
    try:
        if name == "channels":
            return tuple(int(c) for c in str(raw).split(","))
        if name in _BOOL_KEYS:
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")
        if name in _STR_KEYS:
            return str(raw)
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r} ({exc})") from None


def load_config(path=None, overrides=None):
    """Build a PipelineConfig from file + overrides and validate it.

    Precedence: defaults < config file (path arg or PROSODY_UNITS_CONFIG)
    < `overrides` (CLI flags).  Unknown keys abort.
    """
    cfg = PipelineConfig()
    known = {f.name: f for f in fields(PipelineConfig)}
    kinds = {name: type(getattr(cfg, name)) for name in known if name not in _STR_KEYS}

    path = path or os.environ.get("PROSODY_UNITS_CONFIG")
    if path:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        values = {}
        for section in parser.sections():
            for name, raw in parser.items(section):
                if name not in known:
                    raise ConfigError(f"unknown config key {name!r} in [{section}]")
                values[name] = _coerce(name, raw, kinds.get(name, str))
        cfg = replace(cfg, **values)

    if overrides:
        clean = {}
        for name, raw in overrides.items():
            if raw is None:
                continue
            if name not in known:
                raise ConfigError(f"unknown config key {name!r}")
            if isinstance(raw, str):
                raw = _coerce(name, raw, kinds.get(name, str))
            clean[name] = raw
        cfg = replace(cfg, **clean)

    return cfg.validate()


# ---------------------------------------------------------------------------
# Stage runner
# ---------------------------------------------------------------------------


@dataclass
class StageSummary:
    stage: str
    items: list = field(default_factory=list)  # (utterance_id, ok, message)
    notes: list = field(default_factory=list)

    def record_ok(self, utt, message="ok"):
        self.items.append((utt, True, message))

    def record_failure(self, utt, message):
        self.items.append((utt, False, message))

    @property
    def n_ok(self):
        return sum(1 for _, ok, _ in self.items if ok)

    @property
    def n_failed(self):
        return len(self.items) - self.n_ok

    @property
    def failed(self):
        return self.n_failed > 0

    def format(self):
        lines = [f"stage {self.stage}"]
        lines.extend(f"note: {note}" for note in self.notes)
        for utt, ok, message in self.items:
            lines.append(f"{'ok' if ok else 'FAILED'} {utt}: {message}")
        lines.append(f"{self.n_ok} ok, {self.n_failed} failed")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with atomic_write(path) as fh:
            fh.write(self.format())


class _Paths:
    def __init__(self, workdir):
        self.workdir = Path(workdir)

    def features(self, utt):
        return self.workdir / "features" / f"{utt}.feat"

    def codebook(self):
        return self.workdir / "codebook.txt"

    def units(self, utt):
        return self.workdir / "units" / f"{utt}.units"

    def reduced(self, utt):
        return self.workdir / "reduced" / f"{utt}.reduced"

    def f0(self, utt):
        return self.workdir / "f0" / f"{utt}.f0.csv"

    def emb(self, utt):
        return self.workdir / "emb" / f"{utt}.emb"

    def speaker_stats(self):
        return self.workdir / "speaker_stats.csv"

    def speaker_table(self):
        return self.workdir / "speakers.emb"

    def model(self, kind):
        return self.workdir / "models" / f"{kind}.ppm"

    def cond(self, utt):
        return self.workdir / "cond" / f"{utt}.cnd"

    def synth_wav(self, utt):
        return self.workdir / "synth" / f"{utt}.wav"

    def eval_dir(self):
        return self.workdir / "eval"

    def summary(self, stage):
        return self.workdir / f"{stage}_summary.txt"


def run_pipeline(cfg, manifest, stage, workdir):
    """Run one stage over the manifest; returns a StageSummary.

    Per-utterance problems are recorded and the run continues; configuration
    violations raise ConfigError immediately.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    cfg.validate()
    paths = _Paths(workdir)
    runner = {
        "units": _stage_units,
        "prosody": _stage_prosody,
        "synth": _stage_synth,
        "eval": _stage_eval,
    }[stage]
    summary = runner(cfg, manifest, paths)
    summary.write(paths.summary(stage))
    return summary


def _stage_units(cfg, manifest, paths):
    summary = StageSummary(stage="units")
    codebook = None
    if paths.codebook().exists():
        codebook = units.read_codebook(paths.codebook())
    else:
        feats = []
        for rec in manifest:
            try:
                feats.append(
                    units.read_feature_file(paths.features(rec.utterance_id), cfg.frame_period)
                )
            except (OSError, ValueError):
                continue
        if feats:
            codebook = units.kmeans_fit(feats, cfg.k, max_iters=cfg.max_iters, seed=cfg.seed)
            units.write_codebook(paths.codebook(), codebook)
            summary.notes.append(f"fitted codebook k={cfg.k} from {len(feats)} utterances")
    for rec in manifest:
        utt = rec.utterance_id
        try:
            feats = units.read_feature_file(paths.features(utt), cfg.frame_period)
            if codebook is None:
                raise ValueError("no codebook available")
            seq = units.quantize(feats, codebook)
            units.write_unit_file(paths.units(utt), [seq])
            units.write_reduced_file(paths.reduced(utt), [units.reduce_units(seq)])
            summary.record_ok(utt, f"{len(seq)} frames")
        except (OSError, ValueError) as exc:
            summary.record_failure(utt, str(exc))
    return summary


def _stage_prosody(cfg, manifest, paths):
    summary = StageSummary(stage="prosody")
    tracker_cfg = cfg.tracker_config()
    bottleneck = None
    tracks_by_speaker = {}
    for rec in manifest:
        utt = rec.utterance_id
        try:
            wave = audio.read_wav(manifest.resolve_audio(rec))
            track = pitch.track_f0(wave, tracker_cfg)
            pitch.write_f0_csv(paths.f0(utt), track)
            tracks_by_speaker.setdefault(rec.speaker_id, []).append(track)
            feats = units.read_feature_file(paths.features(utt), cfg.frame_period)
            if bottleneck is None:
                bottleneck = predictors.EmotionBottleneck.random(feats.dim, seed=cfg.seed)
            emo = predictors.encode_emotion(feats, bottleneck)
            predictors.write_embeddings(paths.emb(utt), emo.values[None, :])
            summary.record_ok(utt, f"{len(track)} frames tracked")
        except (OSError, ValueError) as exc:
            summary.record_failure(utt, str(exc))

    stats_rows = []
    for speaker_id in sorted(tracks_by_speaker):
        try:
            stats_rows.append(pitch.speaker_stats(tracks_by_speaker[speaker_id], speaker_id))
        except ValueError as exc:
            summary.notes.append(f"speaker {speaker_id}: {exc}")
    if stats_rows:
        pitch.write_speaker_stats_csv(paths.speaker_stats(), stats_rows)
    table = predictors.SpeakerTable.init(manifest.speaker_ids(), dim=cfg.spk_dim, seed=cfg.seed)
    predictors.save_speaker_table(paths.speaker_table(), table)
    return summary


def _quantize_decode_track(track, stats, quantizer, n_out):
    """Ground-truth F0 path: resample, normalize, one-hot, decode to Hz."""
    rate = n_out / (len(track) * track.frame_period)
    resampled = conditioning.interpolate_f0(track, rate)
    if resampled.size != n_out:  # rounding edge; force exact alignment
        resampled = np.resize(resampled, n_out)
    out = np.zeros(n_out)
    for i, value in enumerate(resampled):
        if value <= 0:
            continue
        norm = (value - stats.mean_hz) / stats.std_hz
        onehot = pitch.f0_to_bins(norm, quantizer)
        out[i] = pitch.bins_to_f0(onehot, quantizer, stats)
    return out


def _stage_synth(cfg, manifest, paths):
    summary = StageSummary(stage="synth")
    try:
        stats_by_speaker = pitch.read_speaker_stats_csv(paths.speaker_stats())
        table = predictors.load_speaker_table(paths.speaker_table())
    except (OSError, ValueError) as exc:
        for rec in manifest:
            summary.record_failure(rec.utterance_id, f"missing prosody artifacts: {exc}")
        return summary

    duration_model = pitch_model = None
    if paths.model("duration").exists():
        duration_model = predictors.load_model(paths.model("duration"))
        summary.notes.append("using trained duration predictor")
    if paths.model("pitch").exists():
        pitch_model = predictors.load_model(paths.model("pitch"))
        summary.notes.append("using trained pitch predictor")
    quantizer = cfg.quantizer()
    if duration_model is not None:
        unit_emb = duration_model.params["emb"]
    else:
        unit_emb = np.random.default_rng(cfg.seed).normal(0.0, 0.5, size=(cfg.k, cfg.emb_dim))

    for rec in manifest:
        utt = rec.utterance_id
        try:
            reduced = units.read_reduced_file(paths.reduced(utt), cfg.frame_period)[0]
            emo = predictors.EmotionEmbedding(predictors.read_embeddings(paths.emb(utt))[0])
            stats = stats_by_speaker.get(rec.speaker_id)
            if stats is None:
                raise ValueError(f"no pitch statistics for speaker {rec.speaker_id!r}")
            spk = predictors.speaker_lookup(table, rec.speaker_id)

            if duration_model is not None:
                durations = predictors.predict_durations(reduced, emo, duration_model)
                reduced = units.ReducedUnitSequence(
                    units=reduced.units, durations=durations, frame_period=cfg.frame_period
                )
            inflated = units.expand(reduced)

            if pitch_model is not None:
                acts = predictors.predict_pitch(inflated, emo, pitch_model, quantizer)
                f0 = np.array(
                    [pitch.bins_to_f0(a, quantizer, stats) for a in acts]
                )
            else:
                track = pitch.read_f0_csv(paths.f0(utt))
                f0 = _quantize_decode_track(track, stats, quantizer, len(inflated))

            cond = conditioning.assemble_conditioning(
                inflated, unit_emb, f0, emo, spk, frame_period=cfg.frame_period
            )
            conditioning.write_conditioning(paths.cond(utt), cond)
            wave = conditioning.toy_synthesize(cond, cfg.sample_rate, noise_seed=cfg.seed)
            audio.write_wav(paths.synth_wav(utt), wave)
            summary.record_ok(utt, f"{len(wave)} samples")
        except (OSError, ValueError, IndexError) as exc:
            summary.record_failure(utt, str(exc))
    return summary


def _stage_eval(cfg, manifest, paths):
    summary = StageSummary(stage="eval")
    hyp_path = Path(cfg.eval_hyp) if cfg.eval_hyp else paths.eval_dir() / "hyp.txt"
    ref_path = Path(cfg.eval_ref) if cfg.eval_ref else paths.eval_dir() / "ref.txt"
    try:
        hyp_lines = Path(hyp_path).read_text(encoding="utf-8").splitlines()
        ref_lines = Path(ref_path).read_text(encoding="utf-8").splitlines()
        corpus = bleu_mod.TokenizedCorpus(
            hypotheses=[bleu_mod.tokenize(l, cfg.lowercase) for l in hyp_lines],
            references=[bleu_mod.tokenize(l, cfg.lowercase) for l in ref_lines],
        )
        score = bleu_mod.bleu(corpus)
        report_path = paths.eval_dir() / "report.txt"
        with atomic_write(report_path) as fh:
            fh.write(f"BLEU = {score:.2f}\n")
            fh.write(f"segments = {len(corpus)}\n")
        summary.record_ok("corpus", f"BLEU = {score:.2f} over {len(corpus)} segments")
    except (OSError, ValueError) as exc:
        summary.record_failure("corpus", str(exc))
    return summary
