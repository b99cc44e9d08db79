"""Expressivity analysis report: delimited distances, text summary, figures.

Given a reference feature table and one table per synthesis system, computes
standardized Euclidean distances per utterance, runs the across-system ANOVA
and the forward stepwise LDA over the labeled feature vectors, optionally
correlates opinion scores with distances, and renders boxplot/lambda-curve
figures next to the delimited output.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from prosody_units.evaluation.features import FEATURE_NAMES
from prosody_units.evaluation.slda import forward_slda
from prosody_units.evaluation.stats import anova_oneway, pearson, standardized_euclidean
from prosody_units.ioutil import atomic_write


def compute_distances(reference, systems):
    """Per-system distances to the reference, scaled by pooled feature stds.

    Returns (scale, {system: [(utterance_id, distance), ...]}); pairing is by
    utterance_id, restricted to ids present on both sides.
    """
    pool = [vec.as_array() for vec in reference.values()]
    for table in systems.values():
        pool.extend(vec.as_array() for vec in table.values())
    if not pool:
        raise ValueError("no feature vectors to evaluate")
    scale = np.std(np.stack(pool), axis=0)

    distances = {}
    for name, table in systems.items():
        shared = sorted(set(table) & set(reference))
        distances[name] = [
            (utt, standardized_euclidean(table[utt], reference[utt], scale))
            for utt in shared
        ]
    return scale, distances


def write_distances_csv(path, distances):
    with atomic_write(path) as fh:
        fh.write("system,utterance_id,distance\n")
        for name in sorted(distances):
            for utt, dist in distances[name]:
                fh.write(f"{name},{utt},{dist:.6f}\n")


def _slda_over_systems(systems, alpha):
    rows, labels = [], []
    for idx, name in enumerate(sorted(systems)):
        for vec in systems[name].values():
            rows.append(vec.as_array())
            labels.append(idx)
    if len(set(labels)) < 2 or len(rows) <= len(set(labels)):
        return None
    return forward_slda(np.stack(rows), np.array(labels), alpha=alpha)


def render_report(out_dir, reference, systems, opinion=None, alpha=0.01):
    """Write report.txt, distances.csv and PNG figures into `out_dir`.

    `opinion`, when given, is a list of (system, utterance_id, score) rows to
    correlate against the computed distances.  Returns the report path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scale, distances = compute_distances(reference, systems)
    write_distances_csv(out_dir / "distances.csv", distances)

    lines = []
    lines.append("expressivity distance report")
    lines.append("============================")
    lines.append("")
    lines.append(f"systems: {', '.join(sorted(systems))}")
    lines.append(f"reference utterances: {len(reference)}")
    lines.append("")
    lines.append("per-system standardized Euclidean distance to reference")
    for name in sorted(distances):
        vals = np.array([d for _, d in distances[name]])
        if vals.size == 0:
            lines.append(f"  {name}: no paired utterances")
            continue
        se = vals.std() / np.sqrt(vals.size) if vals.size > 1 else 0.0
        lines.append(
            f"  {name}: mean {vals.mean():.6f}  se {se:.6f}  n {vals.size}"
        )
    lines.append("")

    groups = [
        np.array([d for _, d in distances[name]])
        for name in sorted(distances)
        if len(distances[name]) >= 2
    ]
    if len(groups) >= 2:
        f_stat, p_value = anova_oneway(groups)
        k = len(groups)
        n_total = sum(g.size for g in groups)
        lines.append("one-way ANOVA of distance on system")
        lines.append(
            f"  F({k - 1}, {n_total - k}) = {f_stat:.6f}  p = {p_value:.6f}"
        )
    else:
        lines.append("one-way ANOVA skipped: need >= 2 systems with >= 2 utterances")
    lines.append("")

    slda = _slda_over_systems(systems, alpha)
    if slda is None:
        lines.append("stepwise LDA skipped: need >= 2 systems and enough samples")
    elif not slda.steps:
        lines.append(f"stepwise LDA (alpha = {alpha:.6f}): no feature reached threshold")
    else:
        lines.append(f"stepwise LDA over system labels (alpha = {alpha:.6f})")
        for i, step in enumerate(slda.steps, 1):
            lines.append(
                f"  step {i}: {FEATURE_NAMES[step.feature]}"
                f"  lambda {step.wilks_lambda:.6f}"
                f"  F {step.f_stat:.6f}  p {step.p_value:.6f}"
            )
    lines.append("")

    if opinion:
        by_key = {
            (name, utt): dist
            for name, pairs in distances.items()
            for utt, dist in pairs
        }
        matched = [
            (float(score), by_key[(system, utt)])
            for system, utt, score in opinion
            if (system, utt) in by_key
        ]
        if len(matched) >= 3:
            scores = [s for s, _ in matched]
            dists = [d for _, d in matched]
            try:
                rho, p_value = pearson(scores, dists)
                lines.append("Pearson correlation of opinion score vs distance")
                lines.append(
                    f"  rho = {rho:.6f}  p = {p_value:.6f}  n = {len(matched)}"
                )
            except ValueError as exc:
                lines.append(f"Pearson correlation skipped: {exc}")
        else:
            lines.append("Pearson correlation skipped: fewer than 3 matched scores")
        lines.append("")

    lines.append("feature scale (pooled std per feature)")
    for name, s in zip(FEATURE_NAMES, scale):
        lines.append(f"  {name}: {s:.6f}")
    lines.append("")

    report_path = out_dir / "report.txt"
    with atomic_write(report_path) as fh:
        fh.write("\n".join(lines) + "\n")

    _figure_distances(out_dir / "distances_by_system.png", distances)
    if slda is not None and slda.steps:
        _figure_lambda(out_dir / "slda_lambda.png", slda)
    return report_path


def _save_png(fig, path):
    # Fixed metadata keeps reruns byte-identical.
    fig.savefig(path, format="png", dpi=100, metadata={"Software": "prosody-units"})
    plt.close(fig)


def _figure_distances(path, distances):
    names = sorted(name for name in distances if distances[name])
    if not names:
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    data = [[d for _, d in distances[name]] for name in names]
    ax.boxplot(data, tick_labels=names)
    ax.set_ylabel("standardized Euclidean distance")
    ax.set_title("expressivity distance to reference")
    fig.tight_layout()
    _save_png(fig, path)


def _figure_lambda(path, slda):
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = range(1, len(slda.steps) + 1)
    ax.plot(steps, [s.wilks_lambda for s in slda.steps], marker="o")
    ax.set_xticks(list(steps))
    ax.set_xticklabels(
        [FEATURE_NAMES[s.feature] for s in slda.steps], rotation=30, ha="right"
    )
    ax.set_ylabel("Wilks' lambda")
    ax.set_title("stepwise LDA selection path")
    fig.tight_layout()
    _save_png(fig, path)
