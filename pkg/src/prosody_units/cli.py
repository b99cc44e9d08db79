"""Command-line surface.

Subcommands mirror the module boundaries: `units fit|quantize|reduce|expand`,
`pitch track|stats|quantize`, `train duration|pitch`, `infer`, `assemble`,
`synth`, `eval bleu|features|slda|report` and `pipeline run`.

Exit codes: 0 success, 1 partial failure, 2 configuration error, 3 I/O
error.  Failure paths print one stderr line prefixed with the exit code
(e.g. "E2: ...").
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from prosody_units import audio, conditioning, pitch, predictors, units
from prosody_units.evaluation import bleu as bleu_mod
from prosody_units.evaluation import features as features_mod
from prosody_units.evaluation import report as report_mod
from prosody_units.evaluation import slda as slda_mod
from prosody_units.ioutil import atomic_write
from prosody_units.pipeline import (
    ConfigError,
    StageSummary,
    _Paths,
    load_config,
    parse_manifest,
    run_pipeline,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"E{EXIT_CONFIG}: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _cfg_from_args(args, **flag_map):
    overrides = {key: getattr(args, attr) for key, attr in flag_map.items()}
    return load_config(path=getattr(args, "config", None), overrides=overrides)


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------


def cmd_units_fit(args):
    cfg = _cfg_from_args(args, k="k", max_iters="max_iters", seed="seed",
                         frame_period="frame_period")
    feats = [units.read_feature_file(p, cfg.frame_period) for p in args.features]
    codebook = units.kmeans_fit(feats, cfg.k, max_iters=cfg.max_iters, seed=cfg.seed)
    units.write_codebook(args.out, codebook)
    print(f"codebook: k={codebook.k} d={codebook.dim} "
          f"inertia={codebook.inertia_history[-1]:.6f}")
    return EXIT_OK


def cmd_units_quantize(args):
    cfg = _cfg_from_args(args, frame_period="frame_period")
    codebook = units.read_codebook(args.codebook)
    feats = units.read_feature_file(args.features, cfg.frame_period)
    seq = units.quantize(feats, codebook)
    units.write_unit_file(args.out, [seq])
    print(f"wrote {len(seq)} units")
    return EXIT_OK


def cmd_units_reduce(args):
    cfg = _cfg_from_args(args, frame_period="frame_period")
    seqs = units.read_unit_file(args.units, cfg.frame_period)
    units.write_reduced_file(args.out, [units.reduce_units(s) for s in seqs])
    print(f"reduced {len(seqs)} sequences")
    return EXIT_OK


def cmd_units_expand(args):
    cfg = _cfg_from_args(args, frame_period="frame_period")
    seqs = units.read_reduced_file(args.reduced, cfg.frame_period)
    units.write_unit_file(args.out, [units.expand(s) for s in seqs])
    print(f"expanded {len(seqs)} sequences")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pitch
# ---------------------------------------------------------------------------


def cmd_pitch_track(args):
    cfg = _cfg_from_args(args, f_min="f_min", f_max="f_max",
                         frame_period="frame_period",
                         voicing_threshold="voicing_threshold")
    wave = audio.read_wav(args.wav)
    track = pitch.track_f0(wave, cfg.tracker_config())
    pitch.write_f0_csv(args.out, track)
    n_voiced = int(track.voiced.sum())
    print(f"tracked {len(track)} frames, {n_voiced} voiced")
    return EXIT_OK


def cmd_pitch_stats(args):
    tracks = [pitch.read_f0_csv(p) for p in args.f0]
    stats = pitch.speaker_stats(tracks, args.speaker_id)
    pitch.write_speaker_stats_csv(args.out, [stats])
    print(f"{stats.speaker_id}: mean {stats.mean_hz:.2f} Hz, "
          f"std {stats.std_hz:.2f} Hz, {stats.n_voiced} voiced frames")
    return EXIT_OK


def cmd_pitch_quantize(args):
    cfg = _cfg_from_args(args, d="d", lo="lo", hi="hi")
    track = pitch.read_f0_csv(args.f0)
    stats_map = pitch.read_speaker_stats_csv(args.stats)
    if args.speaker_id not in stats_map:
        raise ValueError(f"no statistics for speaker {args.speaker_id!r}")
    stats = stats_map[args.speaker_id]
    quantizer = cfg.quantizer()
    normalized = pitch.normalize_f0(track, stats)
    with atomic_write(args.out) as fh:
        fh.write("time_s,bin,f0_decoded_hz\n")
        for i in range(len(track)):
            t = i * track.frame_period
            if track.voiced[i]:
                onehot = pitch.f0_to_bins(normalized[i], quantizer)
                decoded = pitch.bins_to_f0(onehot, quantizer, stats)
                fh.write(f"{t:.6f},{int(np.argmax(onehot))},{decoded:.6f}\n")
            else:
                fh.write(f"{t:.6f},-1,0.000000\n")
    print(f"quantized {len(track)} frames into {quantizer.d} bins")
    return EXIT_OK


# ---------------------------------------------------------------------------
# training and inference
# ---------------------------------------------------------------------------


def _load_emotion(paths, utt):
    return predictors.EmotionEmbedding(predictors.read_embeddings(paths.emb(utt))[0])


def _duration_dataset(cfg, manifest, paths, skipped):
    dataset = []
    for rec in manifest:
        utt = rec.utterance_id
        try:
            reduced = units.read_reduced_file(paths.reduced(utt), cfg.frame_period)[0]
            emo = _load_emotion(paths, utt)
            dataset.append((reduced, emo, reduced.durations.astype(np.float64)))
        except (OSError, ValueError, IndexError) as exc:
            skipped.append((utt, str(exc)))
    return dataset


def _pitch_dataset(cfg, manifest, paths, skipped):
    quantizer = cfg.quantizer()
    stats_map = pitch.read_speaker_stats_csv(paths.speaker_stats())
    dataset = []
    for rec in manifest:
        utt = rec.utterance_id
        try:
            reduced = units.read_reduced_file(paths.reduced(utt), cfg.frame_period)[0]
            inflated = units.expand(reduced)
            emo = _load_emotion(paths, utt)
            track = pitch.read_f0_csv(paths.f0(utt))
            stats = stats_map.get(rec.speaker_id)
            if stats is None:
                raise ValueError(f"no pitch statistics for speaker {rec.speaker_id!r}")
            n = len(inflated)
            rate = n / (len(track) * track.frame_period)
            f0 = conditioning.interpolate_f0(track, rate)
            f0 = np.resize(f0, n)
            targets = np.zeros((n, quantizer.d))
            for i, value in enumerate(f0):
                if value > 0:
                    norm = (value - stats.mean_hz) / stats.std_hz
                    targets[i] = pitch.f0_to_bins(norm, quantizer)
            dataset.append((inflated, emo, targets))
        except (OSError, ValueError, IndexError) as exc:
            skipped.append((utt, str(exc)))
    return dataset


def _run_training(args, kind):
    cfg = _cfg_from_args(args, epochs="epochs", learning_rate="learning_rate",
                         batch_size="batch_size", seed="seed")
    manifest = parse_manifest(args.manifest)
    paths = _Paths(args.workdir)
    skipped = []
    if kind == "duration":
        dataset = _duration_dataset(cfg, manifest, paths, skipped)
        out_dim, loss = 1, "duration-regression"
    else:
        dataset = _pitch_dataset(cfg, manifest, paths, skipped)
        out_dim, loss = cfg.d, "pitch-bin"
    if not dataset:
        raise ValueError("empty dataset: no usable training utterances")
    model = predictors.PredictorModel.build(
        kind, cfg.k, out_dim=out_dim, emb_dim=cfg.emb_dim,
        channels=cfg.channels, kernel=cfg.kernel, seed=cfg.seed,
    )
    train_cfg = predictors.TrainingConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.epochs,
        batch_size=cfg.batch_size, seed=cfg.seed, loss=loss,
    )
    model, history = predictors.train_predictor(model, dataset, train_cfg)
    out = args.out or paths.model(kind)
    predictors.save_model(out, model)
    for utt, why in skipped:
        print(f"skipped {utt}: {why}", file=sys.stderr)
    print(f"trained {kind} predictor on {len(dataset)} utterances, "
          f"final loss {history[-1]:.6f}, saved to {out}")
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_train_duration(args):
    return _run_training(args, "duration")


def cmd_train_pitch(args):
    return _run_training(args, "pitch")


def cmd_infer(args):
    cfg = _cfg_from_args(args)
    manifest = parse_manifest(args.manifest)
    paths = _Paths(args.workdir)
    duration_path = args.duration_model or paths.model("duration")
    pitch_path = args.pitch_model or paths.model("pitch")
    duration_model = (
        predictors.load_model(duration_path) if Path(duration_path).exists() else None
    )
    pitch_model = predictors.load_model(pitch_path) if Path(pitch_path).exists() else None
    if duration_model is None and pitch_model is None:
        raise ValueError("no predictor checkpoints found; train first")
    stats_map = {}
    if pitch_model is not None:
        stats_map = pitch.read_speaker_stats_csv(paths.speaker_stats())
    quantizer = cfg.quantizer()

    summary = StageSummary(stage="infer")
    for rec in manifest:
        utt = rec.utterance_id
        try:
            reduced = units.read_reduced_file(paths.reduced(utt), cfg.frame_period)[0]
            emo = _load_emotion(paths, utt)
            if duration_model is not None:
                durations = predictors.predict_durations(reduced, emo, duration_model)
                reduced = units.ReducedUnitSequence(
                    units=reduced.units, durations=durations,
                    frame_period=cfg.frame_period,
                )
                units.write_reduced_file(
                    paths.workdir / "pred_reduced" / f"{utt}.reduced", [reduced]
                )
            if pitch_model is not None:
                stats = stats_map.get(rec.speaker_id)
                if stats is None:
                    raise ValueError(f"no pitch statistics for speaker {rec.speaker_id!r}")
                inflated = units.expand(reduced)
                acts = predictors.predict_pitch(inflated, emo, pitch_model, quantizer)
                f0 = np.array([pitch.bins_to_f0(a, quantizer, stats) for a in acts])
                track = pitch.PitchTrack(
                    f0_hz=f0, voiced=f0 > 0, frame_period=cfg.frame_period
                )
                pitch.write_f0_csv(paths.workdir / "pred_f0" / f"{utt}.f0.csv", track)
            summary.record_ok(utt)
        except (OSError, ValueError, IndexError) as exc:
            summary.record_failure(utt, str(exc))
    summary.write(paths.summary("infer"))
    print(f"{summary.n_ok} ok, {summary.n_failed} failed")
    return EXIT_PARTIAL if summary.failed else EXIT_OK


# ---------------------------------------------------------------------------
# assembly and synthesis
# ---------------------------------------------------------------------------


def cmd_assemble(args):
    cfg = _cfg_from_args(args, frame_period="frame_period")
    seq = units.read_unit_file(args.units, cfg.frame_period)[0]
    track = pitch.read_f0_csv(args.f0)
    rate = len(seq) / (len(track) * track.frame_period)
    f0 = np.resize(conditioning.interpolate_f0(track, rate), len(seq))
    unit_emb = predictors.read_embeddings(args.unit_emb)
    emo = predictors.EmotionEmbedding(predictors.read_embeddings(args.emotion)[0])
    table = predictors.load_speaker_table(args.speaker_table)
    spk = predictors.speaker_lookup(table, args.speaker_id)
    cond = conditioning.assemble_conditioning(
        seq, unit_emb, f0, emo, spk, frame_period=cfg.frame_period
    )
    conditioning.write_conditioning(args.out, cond)
    print(f"assembled {cond.n_frames} x {cond.data.shape[1]} conditioning matrix")
    return EXIT_OK


def cmd_synth(args):
    cfg = _cfg_from_args(args, sample_rate="sample_rate", seed="seed")
    cond = conditioning.read_conditioning(args.cond)
    wave = conditioning.toy_synthesize(cond, cfg.sample_rate, noise_seed=cfg.seed)
    audio.write_wav(args.out, wave)
    print(f"synthesized {len(wave)} samples at {cfg.sample_rate} Hz")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval_bleu(args):
    hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    ref_lines = Path(args.ref).read_text(encoding="utf-8").splitlines()
    corpus = bleu_mod.TokenizedCorpus(
        hypotheses=[bleu_mod.tokenize(l, args.lowercase) for l in hyp_lines],
        references=[bleu_mod.tokenize(l, args.lowercase) for l in ref_lines],
    )
    score = bleu_mod.bleu(corpus, max_n=args.max_n)
    line = f"BLEU = {score:.2f}"
    print(line)
    if args.out:
        with atomic_write(args.out) as fh:
            fh.write(line + "\n")
    return EXIT_OK


def cmd_eval_features(args):
    cfg = _cfg_from_args(args)
    manifest = parse_manifest(args.manifest)
    rows = []
    failures = []
    for rec in manifest:
        try:
            wave = audio.read_wav(manifest.resolve_audio(rec))
            track = pitch.read_f0_csv(Path(args.f0_dir) / f"{rec.utterance_id}.f0.csv")
            rows.append((rec.utterance_id, features_mod.extract_features(wave, track)))
        except (OSError, ValueError) as exc:
            failures.append((rec.utterance_id, str(exc)))
    if rows:
        features_mod.write_feature_csv(args.out, rows)
    for utt, why in failures:
        print(f"E{EXIT_PARTIAL}: {utt}: {why}", file=sys.stderr)
    print(f"extracted features for {len(rows)} utterances, {len(failures)} failed")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_eval_slda(args):
    import csv as _csv

    with open(args.table, encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        rows, labels = [], []
        for row in reader:
            labels.append(row["label"])
            rows.append([float(row[name]) for name in features_mod.FEATURE_NAMES])
    if not rows:
        raise ValueError(f"{args.table}: no rows")
    label_ids = {name: i for i, name in enumerate(sorted(set(labels)))}
    result = slda_mod.forward_slda(
        np.array(rows), np.array([label_ids[l] for l in labels]), alpha=args.alpha
    )
    lines = [f"forward SLDA (alpha = {args.alpha:.6f})"]
    for i, step in enumerate(result.steps, 1):
        lines.append(
            f"step {i}: {features_mod.FEATURE_NAMES[step.feature]}"
            f"  lambda {step.wilks_lambda:.6f}  F {step.f_stat:.6f}"
            f"  p {step.p_value:.6f}"
        )
    if not result.steps:
        lines.append("no feature reached the threshold")
    text = "\n".join(lines)
    print(text)
    if args.out:
        with atomic_write(args.out) as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _parse_system_arg(value):
    if "=" not in value:
        raise ConfigError(f"--system expects NAME=PATH, got {value!r}")
    name, _, path = value.partition("=")
    return name, path


def cmd_eval_report(args):
    reference = features_mod.read_feature_csv(args.reference)
    systems = {}
    for value in args.system:
        name, path = _parse_system_arg(value)
        systems[name] = features_mod.read_feature_csv(path)
    opinion = None
    if args.opinion:
        import csv as _csv

        with open(args.opinion, encoding="utf-8", newline="") as fh:
            opinion = [
                (row["system"], row["utterance_id"], float(row["score"]))
                for row in _csv.DictReader(fh)
            ]
    report_path = report_mod.render_report(
        args.out_dir, reference, systems, opinion=opinion, alpha=args.alpha
    )
    print(f"report written to {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def cmd_pipeline_run(args):
    cfg = _cfg_from_args(
        args, k="k", d="d", seed="seed", frame_period="frame_period",
        f_min="f_min", f_max="f_max", sample_rate="sample_rate",
        eval_hyp="eval_hyp", eval_ref="eval_ref", lowercase="lowercase",
    )
    manifest = parse_manifest(args.manifest)
    summary = run_pipeline(cfg, manifest, args.stage, args.workdir)
    print(summary.format(), end="")
    return EXIT_PARTIAL if summary.failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def _add_config_arg(parser):
    parser.add_argument("--config", help="INI config file (or PROSODY_UNITS_CONFIG)")


def build_parser():
    parser = _Parser(prog="prosody-units",
                     description="discrete-unit prosody pipeline toolkit")
    _add_config_arg(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p_units = sub.add_parser("units", help="unit codec operations")
    units_sub = p_units.add_subparsers(dest="subcommand", required=True)

    p = units_sub.add_parser("fit", help="fit a codebook with k-means")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.set_defaults(func=cmd_units_fit)

    p = units_sub.add_parser("quantize", help="quantize features to units")
    p.add_argument("--codebook", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.set_defaults(func=cmd_units_quantize)

    p = units_sub.add_parser("reduce", help="collapse consecutive duplicates")
    p.add_argument("--units", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.set_defaults(func=cmd_units_reduce)

    p = units_sub.add_parser("expand", help="expand reduced sequences")
    p.add_argument("--reduced", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.set_defaults(func=cmd_units_expand)

    p_pitch = sub.add_parser("pitch", help="pitch analysis operations")
    pitch_sub = p_pitch.add_subparsers(dest="subcommand", required=True)

    p = pitch_sub.add_parser("track", help="track F0 from a WAV file")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--f-min", dest="f_min", type=float)
    p.add_argument("--f-max", dest="f_max", type=float)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.add_argument("--voicing-threshold", dest="voicing_threshold", type=float)
    p.set_defaults(func=cmd_pitch_track)

    p = pitch_sub.add_parser("stats", help="per-speaker F0 statistics")
    p.add_argument("--f0", nargs="+", required=True)
    p.add_argument("--speaker-id", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pitch_stats)

    p = pitch_sub.add_parser("quantize", help="encode/decode F0 through bins")
    p.add_argument("--f0", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--speaker-id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.set_defaults(func=cmd_pitch_quantize)

    p_train = sub.add_parser("train", help="train prosody predictors")
    train_sub = p_train.add_subparsers(dest="subcommand", required=True)
    for kind, func in (("duration", cmd_train_duration), ("pitch", cmd_train_pitch)):
        p = train_sub.add_parser(kind, help=f"train the {kind} predictor")
        p.add_argument("--manifest", required=True)
        p.add_argument("--workdir", required=True)
        p.add_argument("--out")
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("infer", help="run trained predictors over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--duration-model", dest="duration_model")
    p.add_argument("--pitch-model", dest="pitch_model")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("assemble", help="build a conditioning matrix")
    p.add_argument("--units", required=True)
    p.add_argument("--f0", required=True)
    p.add_argument("--unit-emb", dest="unit_emb", required=True)
    p.add_argument("--emotion", required=True)
    p.add_argument("--speaker-table", dest="speaker_table", required=True)
    p.add_argument("--speaker-id", dest="speaker_id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("synth", help="render audio from a conditioning matrix")
    p.add_argument("--cond", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="evaluation suite")
    eval_sub = p_eval.add_subparsers(dest="subcommand", required=True)

    p = eval_sub.add_parser("bleu", help="corpus BLEU of parallel text files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--max-n", dest="max_n", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_bleu)

    p = eval_sub.add_parser("features", help="extract the six acoustic features")
    p.add_argument("--manifest", required=True)
    p.add_argument("--f0-dir", dest="f0_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_features)

    p = eval_sub.add_parser("slda", help="stepwise LDA over a labeled table")
    p.add_argument("--table", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_slda)

    p = eval_sub.add_parser("report", help="distance report with figures")
    p.add_argument("--reference", required=True)
    p.add_argument("--system", action="append", required=True,
                   metavar="NAME=PATH")
    p.add_argument("--opinion")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_eval_report)

    p_pipe = sub.add_parser("pipeline", help="staged end-to-end runs")
    pipe_sub = p_pipe.add_subparsers(dest="subcommand", required=True)
    p = pipe_sub.add_parser("run", help="run one stage over a manifest")
    p.add_argument("--stage", required=True,
                   choices=("units", "prosody", "synth", "eval"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--frame-period", dest="frame_period", type=float)
    p.add_argument("--f-min", dest="f_min", type=float)
    p.add_argument("--f-max", dest="f_max", type=float)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.add_argument("--eval-hyp", dest="eval_hyp")
    p.add_argument("--eval-ref", dest="eval_ref")
    p.add_argument("--lowercase", action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_pipeline_run)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"E{EXIT_CONFIG}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"E{EXIT_IO}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"E{EXIT_IO}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"E{EXIT_CONFIG}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
