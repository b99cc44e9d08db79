"""Desk-scale toolkit for discrete-unit speech resynthesis with prosody transfer.

The pipeline mirrors a unit-based speech synthesis stack: frame features are
clustered into discrete units, F0 is tracked and quantized per speaker,
emotion-conditioned predictors recover unit durations and pitch, and a toy
harmonic synthesizer renders audio from the assembled conditioning matrix.
An evaluation suite (BLEU, acoustic expressivity features, stepwise LDA,
ANOVA, Pearson) closes the loop.
"""

__version__ = "0.1.0"

from prosody_units.units import (
    Codebook,
    FrameFeatures,
    ReducedUnitSequence,
    UnitSequence,
    expand,
    kmeans_fit,
    quantize,
    reduce_units,
)
from prosody_units.pitch import (
    PitchQuantizer,
    PitchTrack,
    SpeakerPitchStats,
    bins_to_f0,
    f0_to_bins,
    normalize_f0,
    speaker_stats,
    track_f0,
)
from prosody_units.predictors import (
    EmotionEmbedding,
    PredictorModel,
    SpeakerTable,
    TrainingConfig,
    encode_emotion,
    grad_check,
    predict_durations,
    predict_pitch,
    speaker_lookup,
    train_predictor,
)
from prosody_units.conditioning import (
    ConditioningMatrix,
    assemble_conditioning,
    interpolate_f0,
    toy_synthesize,
)
from prosody_units.audio import Waveform

__all__ = [
    "Codebook",
    "ConditioningMatrix",
    "EmotionEmbedding",
    "FrameFeatures",
    "PitchQuantizer",
    "PitchTrack",
    "PredictorModel",
    "ReducedUnitSequence",
    "SpeakerPitchStats",
    "SpeakerTable",
    "TrainingConfig",
    "UnitSequence",
    "Waveform",
    "assemble_conditioning",
    "bins_to_f0",
    "encode_emotion",
    "expand",
    "f0_to_bins",
    "grad_check",
    "interpolate_f0",
    "kmeans_fit",
    "normalize_f0",
    "predict_durations",
    "predict_pitch",
    "quantize",
    "reduce_units",
    "speaker_lookup",
    "speaker_stats",
    "toy_synthesize",
    "track_f0",
    "train_predictor",
]
