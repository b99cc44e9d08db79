import numpy as np
import pytest

import prosody_units.predictors as predictors_mod
from prosody_units.pitch import PitchQuantizer
from prosody_units.predictors import (
    EMO_DIM,
    EmotionBottleneck,
    EmotionEmbedding,
    PredictorModel,
    SpeakerTable,
    TrainingConfig,
    encode_emotion,
    grad_check,
    load_model,
    load_speaker_table,
    predict_durations,
    predict_pitch,
    read_embeddings,
    save_model,
    save_speaker_table,
    speaker_lookup,
    train_predictor,
    write_embeddings,
)
from prosody_units.units import FrameFeatures, ReducedUnitSequence


def random_reduced(rng, length, k):
    u = [int(rng.integers(k))]
    while len(u) < length:
        c = int(rng.integers(k))
        if c != u[-1]:
            u.append(c)
    return np.array(u, dtype=np.int64)


def duration_rule_dataset(rng, n, k=16):
    """duration = 2 if unit even else 4, +1 when emo[0] > 0."""
    data = []
    for i in range(n):
        u = random_reduced(rng, int(rng.integers(8, 16)), k)
        emo = np.zeros(EMO_DIM)
        emo[0] = 1.0 if i % 2 == 0 else -1.0
        target = np.where(u % 2 == 0, 2.0, 4.0) + (1.0 if emo[0] > 0 else 0.0)
        red = ReducedUnitSequence(units=u, durations=target.astype(np.int64))
        data.append((red, emo, target))
    return data


def pitch_rule_dataset(rng, n, k=16, d=8):
    """target bin = unit id mod d."""
    data = []
    for _ in range(n):
        u = rng.integers(0, k, size=int(rng.integers(10, 20)))
        emo = np.zeros(EMO_DIM)
        emo[0] = float(rng.choice([-1.0, 1.0]))
        targets = np.zeros((u.size, d))
        targets[np.arange(u.size), u % d] = 1.0
        data.append((u, emo, targets))
    return data


class TestEmotionEncoder:
    def test_identical_frames_give_bottleneck_output(self):
        bottleneck = EmotionBottleneck.random(12, seed=3)
        x = np.linspace(-1.0, 1.0, 12)
        feats = FrameFeatures(np.tile(x, (7, 1)))
        emb = encode_emotion(feats, bottleneck)
        assert np.allclose(emb.values, bottleneck.weight @ x + bottleneck.bias)

    def test_order_invariant(self):
        rng = np.random.default_rng(0)
        frames = rng.standard_normal((20, 12))
        bottleneck = EmotionBottleneck.random(12, seed=3)
        a = encode_emotion(FrameFeatures(frames), bottleneck)
        b = encode_emotion(FrameFeatures(frames[::-1].copy()), bottleneck)
        assert np.allclose(a.values, b.values)

    def test_output_dimension(self):
        rng = np.random.default_rng(1)
        emb = encode_emotion(
            FrameFeatures(rng.standard_normal((5, 4))), EmotionBottleneck.random(4)
        )
        assert emb.values.shape == (96,)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            encode_emotion(FrameFeatures(np.empty((0, 4))), EmotionBottleneck.random(4))


class TestSpeakerTable:
    def test_insert_lookup(self):
        v = np.arange(16, dtype=np.float64)
        table = SpeakerTable(entries={"spk1": v}, dim=16)
        assert np.array_equal(speaker_lookup(table, "spk1"), v)

    def test_unknown_speaker(self):
        table = SpeakerTable(entries={}, dim=16)
        with pytest.raises(ValueError, match="unknown speaker"):
            speaker_lookup(table, "ghost")

    def test_distinct_vectors(self):
        table = SpeakerTable.init(["a", "b"], dim=8, seed=0)
        assert not np.array_equal(speaker_lookup(table, "a"), speaker_lookup(table, "b"))

    def test_save_load(self, tmp_path):
        table = SpeakerTable.init(["a", "b", "c"], dim=8, seed=5)
        save_speaker_table(tmp_path / "spk.emb", table)
        back = load_speaker_table(tmp_path / "spk.emb")
        for sid in ("a", "b", "c"):
            assert np.allclose(
                speaker_lookup(back, sid), speaker_lookup(table, sid), atol=1e-6
            )


class TestInferenceContracts:
    def test_duration_shape(self):
        rng = np.random.default_rng(0)
        model = PredictorModel.build("duration", 16, seed=0)
        red = ReducedUnitSequence(
            units=random_reduced(rng, 5, 16), durations=np.ones(5, dtype=np.int64)
        )
        out = predict_durations(red, np.zeros(EMO_DIM), model)
        assert out.shape == (5,)
        assert out.dtype == np.int64

    def test_duration_floor_rule(self):
        # Zeroed weights with head bias 0.2 emit a raw 0.2 for every unit.
        model = PredictorModel.build("duration", 4, seed=0)
        for key in model.params:
            model.params[key] = np.zeros_like(model.params[key])
        model.params["head_b"][0] = 0.2
        red = ReducedUnitSequence(
            units=np.array([0, 1, 2]), durations=np.array([1, 1, 1])
        )
        assert predict_durations(red, np.zeros(EMO_DIM), model).tolist() == [1, 1, 1]

    def test_duration_unit_out_of_range(self):
        model = PredictorModel.build("duration", 4, seed=0)
        red = ReducedUnitSequence(units=np.array([9]), durations=np.array([1]))
        with pytest.raises(ValueError, match="out of range"):
            predict_durations(red, np.zeros(EMO_DIM), model)

    def test_pitch_shape_and_range(self):
        rng = np.random.default_rng(0)
        model = PredictorModel.build("pitch", 16, out_dim=8, seed=0)
        u = rng.integers(0, 16, size=12)
        acts = predict_pitch(u, np.zeros(EMO_DIM), model)
        assert acts.shape == (12, 8)
        assert np.all((acts > 0.0) & (acts < 1.0))

    def test_pitch_quantizer_mismatch(self):
        model = PredictorModel.build("pitch", 16, out_dim=8, seed=0)
        with pytest.raises(ValueError, match="dimension mismatch"):
            predict_pitch(
                np.array([0, 1]), np.zeros(EMO_DIM), model, PitchQuantizer(d=32)
            )


class TestTraining:
    def test_constant_target_converges(self):
        rng = np.random.default_rng(3)
        data = []
        for _ in range(10):
            u = random_reduced(rng, 8, 8)
            data.append((ReducedUnitSequence(units=u, durations=np.full(8, 3)),
                         np.zeros(EMO_DIM), np.full(8, 3.0)))
        model = PredictorModel.build("duration", 8, emb_dim=8, channels=(16, 16), seed=0)
        cfg = TrainingConfig(learning_rate=0.05, epochs=200, batch_size=4, seed=0)
        _, history = train_predictor(model, data, cfg)
        assert history[-1] < 1e-3

    def test_zero_learning_rate_freezes_loss(self):
        rng = np.random.default_rng(4)
        data = duration_rule_dataset(rng, 8)
        model = PredictorModel.build("duration", 16, emb_dim=8, channels=(8,), seed=0)
        cfg = TrainingConfig(learning_rate=0.0, epochs=5, batch_size=4, seed=0)
        _, history = train_predictor(model, data, cfg)
        assert all(h == history[0] for h in history)

    def test_seed_reproducibility_bitwise(self):
        rng = np.random.default_rng(5)
        data = duration_rule_dataset(rng, 12)
        cfg = TrainingConfig(learning_rate=0.05, epochs=10, batch_size=4, seed=9)
        m1 = PredictorModel.build("duration", 16, emb_dim=8, channels=(8,), seed=1)
        m2 = PredictorModel.build("duration", 16, emb_dim=8, channels=(8,), seed=1)
        _, h1 = train_predictor(m1, data, cfg)
        _, h2 = train_predictor(m2, data, cfg)
        assert h1 == h2
        for key in m1.params:
            assert np.array_equal(m1.params[key], m2.params[key])

    def test_empty_dataset_rejected(self):
        model = PredictorModel.build("duration", 8, seed=0)
        with pytest.raises(ValueError, match="empty dataset"):
            train_predictor(model, [], TrainingConfig())

    def test_divergence_detected(self):
        rng = np.random.default_rng(6)
        data = duration_rule_dataset(rng, 8)
        model = PredictorModel.build("duration", 16, seed=0)
        cfg = TrainingConfig(learning_rate=1e4, epochs=50, batch_size=4, seed=0)
        with pytest.raises(ValueError, match="diverged"):
            train_predictor(model, data, cfg)

    def test_duration_rule_learnable(self):
        rng = np.random.default_rng(42)
        train = duration_rule_dataset(rng, 80)
        held_out = duration_rule_dataset(rng, 20)
        model = PredictorModel.build("duration", 16, seed=0)
        cfg = TrainingConfig(learning_rate=0.05, epochs=150, batch_size=8, seed=0)
        train_predictor(model, train, cfg)

        errors, changed, total = [], 0, 0
        for red, emo, target in held_out:
            pred = predict_durations(red, emo, model)
            errors.append(np.abs(pred - target).mean())
            flipped = emo.copy()
            flipped[0] = -flipped[0]
            changed += int((pred != predict_durations(red, flipped, model)).sum())
            total += pred.size
        assert np.mean(errors) < 0.5
        # The emotion pathway must be live: flipping emo[0] shifts the rule by 1.
        assert changed / total >= 0.8

    def test_pitch_rule_learnable(self):
        rng = np.random.default_rng(7)
        train = pitch_rule_dataset(rng, 60)
        held_out = pitch_rule_dataset(rng, 20)
        model = PredictorModel.build("pitch", 16, out_dim=8, seed=0)
        cfg = TrainingConfig(
            learning_rate=0.5, epochs=120, batch_size=8, seed=0, loss="pitch-bin"
        )
        train_predictor(model, train, cfg)
        correct = total = 0
        for u, emo, targets in held_out:
            acts = predict_pitch(u, emo, model)
            correct += int((np.argmax(acts, 1) == np.argmax(targets, 1)).sum())
            total += u.size
        assert correct / total >= 0.9


class TestGradCheck:
    def small_duration(self):
        rng = np.random.default_rng(1)
        model = PredictorModel.build(
            "duration", 8, emb_dim=4, channels=(6, 6), seed=1
        )
        u = random_reduced(rng, 6, 8)
        sample = (u, np.linspace(-1, 1, EMO_DIM), rng.normal(2.0, 1.0, size=6))
        return model, sample

    def small_pitch(self):
        rng = np.random.default_rng(2)
        model = PredictorModel.build(
            "pitch", 8, out_dim=4, emb_dim=4, channels=(6, 6), seed=1
        )
        u = rng.integers(0, 8, size=6)
        targets = np.zeros((6, 4))
        targets[np.arange(6), u % 4] = 1.0
        return model, (u, np.linspace(-1, 1, EMO_DIM), targets)

    def test_duration_gradients(self):
        model, sample = self.small_duration()
        assert grad_check(model, sample, epsilon=1e-5) < 1e-4

    def test_pitch_gradients(self):
        model, sample = self.small_pitch()
        assert grad_check(model, sample, epsilon=1e-5) < 1e-4

    def test_zero_weights_zero_input_finite(self):
        model, _ = self.small_duration()
        for key in model.params:
            model.params[key] = np.zeros_like(model.params[key])
        sample = (np.zeros(4, dtype=np.int64), np.zeros(EMO_DIM), np.zeros(4))
        err = grad_check(model, sample, epsilon=1e-5)
        assert np.isfinite(err)
        assert err < 1e-4

    def test_corrupted_gradient_detected(self, monkeypatch):
        model, sample = self.small_duration()
        real = predictors_mod._loss_and_grads

        def corrupted(m, s):
            loss, grads = real(m, s)
            grads["head_b"] = grads["head_b"].copy()
            grads["head_b"][0] += 1.0
            return loss, grads

        monkeypatch.setattr(predictors_mod, "_loss_and_grads", corrupted)
        # n_check above the parameter count so every component is examined
        assert grad_check(model, sample, epsilon=1e-5, n_check=5000) > 0.1

    def test_epsilon_bounds(self):
        model, sample = self.small_duration()
        with pytest.raises(ValueError, match="epsilon"):
            grad_check(model, sample, epsilon=1e-2)


class TestCheckpointFiles:
    def test_model_round_trip(self, tmp_path):
        model = PredictorModel.build("pitch", 12, out_dim=6, emb_dim=8,
                                     channels=(10, 10), seed=4)
        path = tmp_path / "m.ppm"
        save_model(path, model)
        back = load_model(path)
        assert back.kind == "pitch" and back.k == 12 and back.out_dim == 6
        for key in model.params:
            assert np.allclose(back.params[key], model.params[key], atol=1e-6)
        assert path.read_bytes()[:5] == b"PPM1 "

    def test_saved_model_predicts_identically_after_reload(self, tmp_path):
        rng = np.random.default_rng(0)
        model = PredictorModel.build("duration", 8, emb_dim=4, channels=(6,), seed=2)
        save_model(tmp_path / "m.ppm", model)
        back = load_model(tmp_path / "m.ppm")
        red = ReducedUnitSequence(
            units=random_reduced(rng, 5, 8), durations=np.ones(5, dtype=np.int64)
        )
        save_model(tmp_path / "m2.ppm", back)
        # float32 storage is idempotent: a second save/load changes nothing
        again = load_model(tmp_path / "m2.ppm")
        emo = np.zeros(EMO_DIM)
        assert np.array_equal(
            predict_durations(red, emo, back), predict_durations(red, emo, again)
        )

    def test_truncated_checkpoint_rejected(self, tmp_path):
        model = PredictorModel.build("duration", 8, seed=0)
        path = tmp_path / "m.ppm"
        save_model(path, model)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError, match="truncated"):
            load_model(path)

    def test_embeddings_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        mat = rng.standard_normal((4, 96)).astype(np.float32).astype(np.float64)
        path = tmp_path / "e.emb"
        write_embeddings(path, mat)
        back = read_embeddings(path)
        assert np.array_equal(back, mat)
        assert path.read_bytes()[:5] == b"EMB1 "

    def test_emotion_embedding_validation(self):
        with pytest.raises(ValueError, match="96"):
            EmotionEmbedding(np.zeros(32))
