"""Discrete unit codec: codebook discovery, quantization and run-length coding.

Frame-level feature vectors (one per 20 ms by default) are clustered with
Lloyd k-means into a codebook of K centroids.  Quantizing a feature sequence
yields a unit sequence (one cluster index per frame); collapsing consecutive
duplicates yields the reduced form whose run lengths are the duration targets
of the prosody predictors.
"""

from dataclasses import dataclass, field

import numpy as np

from prosody_units.ioutil import atomic_write

DEFAULT_FRAME_PERIOD = 0.020


@dataclass
class FrameFeatures:
    """A (T, D) matrix of frame feature vectors at a fixed frame period."""

    frames: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a 2-D (T, D) array")
        if self.frames.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("frames must be finite")
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")

    @property
    def dim(self):
        return self.frames.shape[1]

    def __len__(self):
        return self.frames.shape[0]


@dataclass
class Codebook:
    """K centroids of dimension D; `inertia_history` records Lloyd progress."""

    centroids: np.ndarray
    inertia_history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValueError("centroids must be a non-empty 2-D (K, D) array")
        if len(np.unique(self.centroids, axis=0)) != self.centroids.shape[0]:
            raise ValueError("duplicate centroids")

    @property
    def k(self):
        return self.centroids.shape[0]

    @property
    def dim(self):
        return self.centroids.shape[1]


@dataclass
class UnitSequence:
    """Cluster indices at frame rate."""

    units: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=np.int64)
        if self.units.ndim != 1:
            raise ValueError("units must be 1-D")
        if self.units.size and self.units.min() < 0:
            raise ValueError("unit indices must be non-negative")
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")

    def __len__(self):
        return self.units.size

    def __eq__(self, other):
        if not isinstance(other, UnitSequence):
            return NotImplemented
        return (
            self.frame_period == other.frame_period
            and np.array_equal(self.units, other.units)
        )


@dataclass
class ReducedUnitSequence:
    """Deduplicated units with run-length durations (the supervision target)."""

    units: np.ndarray
    durations: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=np.int64)
        self.durations = np.asarray(self.durations, dtype=np.int64)
        if self.units.shape != self.durations.shape or self.units.ndim != 1:
            raise ValueError("units and durations must be 1-D of equal length")
        if self.durations.size and self.durations.min() < 1:
            raise ValueError("invalid duration: all durations must be >= 1")
        if self.units.size > 1 and np.any(self.units[1:] == self.units[:-1]):
            raise ValueError("consecutive duplicate units in reduced sequence")

    def __len__(self):
        return self.units.size

    def __eq__(self, other):
        if not isinstance(other, ReducedUnitSequence):
            return NotImplemented
        return (
            self.frame_period == other.frame_period
            and np.array_equal(self.units, other.units)
            and np.array_equal(self.durations, other.durations)
        )


def _stack_frames(features):
    """Concatenate one FrameFeatures or a collection into a single matrix."""
    if isinstance(features, FrameFeatures):
        features = [features]
    mats = [f.frames for f in features]
    if not mats:
        raise ValueError("insufficient data: no feature matrices given")
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
    return np.concatenate(mats, axis=0)


def _nearest(points, centroids, chunk=2048):
    """Index of nearest centroid (squared Euclidean, lowest index on ties).

    Distances are computed with an explicit difference so that exactly
    equidistant points produce bit-equal distances and argmin's first-match
    rule gives the documented lowest-index tie-break.
    """
    out = np.empty(points.shape[0], dtype=np.int64)
    dist = np.empty(points.shape[0], dtype=np.float64)
    for start in range(0, points.shape[0], chunk):
        block = points[start : start + chunk]
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        out[start : start + chunk] = np.argmin(d2, axis=1)
        dist[start : start + chunk] = d2[np.arange(block.shape[0]), out[start : start + chunk]]
    return out, dist


def _farthest_point_seed(points, k, rng):
    """Greedy farthest-point seeding: deterministic given the first pick."""
    n = points.shape[0]
    centers = np.empty(k, dtype=np.int64)
    centers[0] = rng.integers(n)
    d2 = ((points - points[centers[0]]) ** 2).sum(axis=1)
    for j in range(1, k):
        centers[j] = int(np.argmax(d2))
        d2 = np.minimum(d2, ((points - points[centers[j]]) ** 2).sum(axis=1))
    return points[centers].copy()


def kmeans_fit(features, k, max_iters=100, seed=0):
    """Fit a codebook of `k` centroids with Lloyd iteration.

    Initialization is farthest-point seeding from a seeded random start, so a
    fixed seed reproduces the fit exactly.  Iteration stops when assignments
    no longer change or `max_iters` is reached.  The summed squared distance
    to the nearest centroid (inertia) after each iteration is kept on the
    returned codebook and is non-increasing.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    points = _stack_frames(features)
    if points.shape[0] == 0:
        raise ValueError("insufficient data: empty input")
    if points.shape[0] < k:
        raise ValueError(
            f"insufficient data: {points.shape[0]} frames for k={k} clusters"
        )
    rng = np.random.default_rng(seed)
    centroids = _farthest_point_seed(points, k, rng)

    assign = np.full(points.shape[0], -1, dtype=np.int64)
    history = []
    for _ in range(max_iters):
        new_assign, d2 = _nearest(points, centroids)
        # Refill any empty cluster with the point farthest from its centroid.
        for j in range(k):
            if not np.any(new_assign == j):
                far = int(np.argmax(d2))
                centroids[j] = points[far]
                new_assign[far] = j
                d2[far] = 0.0
        for j in range(k):
            members = points[new_assign == j]
            if members.shape[0]:
                centroids[j] = members.mean(axis=0)
        _, d2 = _nearest(points, centroids)
        history.append(float(d2.sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    # Nudge exact duplicates apart (degenerate toy data); keeps the codebook
    # invariant without changing assignments in practice.
    centroids = _dedupe_centroids(centroids)
    return Codebook(centroids=centroids, inertia_history=tuple(history))


def _dedupe_centroids(centroids):
    _, first = np.unique(centroids, axis=0, return_index=True)
    if first.size == centroids.shape[0]:
        return centroids
    out = centroids.copy()
    seen = set()
    scale = max(1.0, float(np.abs(centroids).max()))
    for i in range(out.shape[0]):
        key = out[i].tobytes()
        bump = 0
        while key in seen:
            bump += 1
            out[i, 0] = np.nextafter(out[i, 0], np.inf)
            key = out[i].tobytes()
            if bump > 1000:  # pragma: no cover - pathological data
                out[i, 0] += 1e-9 * scale * i
                key = out[i].tobytes()
        seen.add(key)
    return out


def quantize(features, codebook):
    """Map each frame to the index of its nearest centroid."""
    if features.dim != codebook.dim:
        raise ValueError(
            f"dimension mismatch: features D={features.dim}, codebook D={codebook.dim}"
        )
    units, _ = _nearest(features.frames, codebook.centroids)
    return UnitSequence(units=units, frame_period=features.frame_period)


def reduce_units(seq):
    """Collapse consecutive duplicate units, recording run lengths."""
    units = seq.units
    if units.size == 0:
        return ReducedUnitSequence(
            units=np.empty(0, dtype=np.int64),
            durations=np.empty(0, dtype=np.int64),
            frame_period=seq.frame_period,
        )
    starts = np.flatnonzero(np.concatenate(([True], units[1:] != units[:-1])))
    durations = np.diff(np.concatenate((starts, [units.size])))
    return ReducedUnitSequence(
        units=units[starts].copy(),
        durations=durations,
        frame_period=seq.frame_period,
    )


def expand(reduced):
    """Repeat each unit by its duration, inverting `reduce_units`."""
    if reduced.durations.size and reduced.durations.min() < 1:
        raise ValueError("invalid duration: all durations must be >= 1")
    return UnitSequence(
        units=np.repeat(reduced.units, reduced.durations),
        frame_period=reduced.frame_period,
    )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------
# Unit file: one utterance per line, space-separated decimal integers.
# Reduced file: one utterance per line, "unit:duration" tokens.
# Codebook / feature-matrix file: header "N D", then N lines of D reals.


def write_unit_file(path, sequences):
    with atomic_write(path) as fh:
        for seq in sequences:
            fh.write(" ".join(str(int(u)) for u in seq.units) + "\n")


def read_unit_file(path, frame_period=DEFAULT_FRAME_PERIOD):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            out.append(
                UnitSequence(
                    units=np.array([int(t) for t in toks], dtype=np.int64),
                    frame_period=frame_period,
                )
            )
    return out


def write_reduced_file(path, sequences):
    with atomic_write(path) as fh:
        for seq in sequences:
            fh.write(
                " ".join(
                    f"{int(u)}:{int(d)}" for u, d in zip(seq.units, seq.durations)
                )
                + "\n"
            )


def read_reduced_file(path, frame_period=DEFAULT_FRAME_PERIOD):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            units, durs = [], []
            for tok in line.split():
                try:
                    u, d = tok.split(":")
                    units.append(int(u))
                    durs.append(int(d))
                except ValueError as exc:
                    raise ValueError(
                        f"{path}:{lineno}: malformed token {tok!r}"
                    ) from exc
            out.append(
                ReducedUnitSequence(
                    units=np.array(units, dtype=np.int64),
                    durations=np.array(durs, dtype=np.int64),
                    frame_period=frame_period,
                )
            )
    return out


def write_codebook(path, codebook):
    _write_matrix(path, codebook.centroids)


def read_codebook(path):
    return Codebook(centroids=_read_matrix(path))


def write_feature_file(path, features):
    _write_matrix(path, features.frames)


def read_feature_file(path, frame_period=DEFAULT_FRAME_PERIOD):
    return FrameFeatures(frames=_read_matrix(path), frame_period=frame_period)


def _write_matrix(path, mat):
    mat = np.asarray(mat, dtype=np.float64)
    with atomic_write(path) as fh:
        fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad matrix header")
        n, d = int(header[0]), int(header[1])
        mat = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            row = fh.readline().split()
            if len(row) != d:
                raise ValueError(f"{path}: row {i} has {len(row)} values, expected {d}")
            mat[i] = [float(v) for v in row]
    return mat
