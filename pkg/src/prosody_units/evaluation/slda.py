"""Forward stepwise linear discriminant analysis with Wilks' lambda.

Starting from the empty set, each step evaluates every unselected feature by
the Wilks' lambda of the augmented set (det of within-class scatter over det
of total scatter, restricted to the candidate columns), converts the lambda
ratio to a partial F statistic and adds the best feature while its p-value
stays at or below alpha.
"""

from dataclasses import dataclass

import numpy as np

from prosody_units.evaluation.stats import f_sf

RIDGE = 1e-10


@dataclass
class SldaStep:
    feature: int
    wilks_lambda: float
    f_stat: float
    p_value: float


@dataclass
class SldaResult:
    selected: list
    steps: list

    def __post_init__(self):
        lams = [s.wilks_lambda for s in self.steps]
        if any(l2 > l1 + 1e-12 for l1, l2 in zip(lams, lams[1:])):
            raise ValueError("wilks lambda must be non-increasing across steps")
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected features must be unique")


def _scatter_matrices(x, labels):
    grand = x.mean(axis=0)
    centered = x - grand
    total = centered.T @ centered
    within = np.zeros_like(total)
    for cls in np.unique(labels):
        rows = x[labels == cls]
        dev = rows - rows.mean(axis=0)
        within += dev.T @ dev
    return within, total


def _wilks_lambda(within, total, idx):
    w = within[np.ix_(idx, idx)]
    t = total[np.ix_(idx, idx)]
    sign_w, logdet_w = np.linalg.slogdet(w)
    sign_t, logdet_t = np.linalg.slogdet(t)
    if sign_w <= 0 or sign_t <= 0:
        ridge = RIDGE * np.eye(len(idx))
        sign_w, logdet_w = np.linalg.slogdet(w + ridge)
        sign_t, logdet_t = np.linalg.slogdet(t + ridge)
        if sign_w <= 0 or sign_t <= 0:
            raise ValueError("degenerate design: singular scatter matrices")
    return float(np.exp(logdet_w - logdet_t))


def forward_slda(x, labels, alpha=0.01):
    """Greedy forward selection maximizing discriminant power.

    Returns the ordered selected feature indices and per-step lambda, partial
    F and p-value.  Selection stops when the best remaining candidate's
    p-value exceeds alpha or the residual degrees of freedom run out.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("x must be (n, p) with p >= 1")
    if labels.shape != (x.shape[0],):
        raise ValueError("labels must have one entry per row")
    classes = np.unique(labels)
    g = classes.size
    n = x.shape[0]
    if g < 2:
        raise ValueError("need at least 2 classes")
    if n <= g:
        raise ValueError("need more samples than classes")

    within, total = _scatter_matrices(x, labels)
    selected = []
    steps = []
    lambda_prev = 1.0
    remaining = list(range(x.shape[1]))
    while remaining:
        p_sel = len(selected)
        df1 = g - 1
        df2 = n - g - p_sel
        if df2 <= 0:
            break
        best = None
        for j in remaining:
            lam = _wilks_lambda(within, total, selected + [j])
            if best is None or lam < best[1]:
                best = (j, lam)
        j, lam = best
        lam = min(lam, lambda_prev)  # numerical guard: adding cannot increase
        ratio = lambda_prev / lam if lam > 0 else np.inf
        f_stat = max(0.0, (df2 / df1) * (ratio - 1.0))
        p_value = f_sf(f_stat, df1, df2)
        if p_value > alpha:
            break
        selected.append(j)
        remaining.remove(j)
        steps.append(SldaStep(feature=j, wilks_lambda=lam, f_stat=f_stat, p_value=p_value))
        lambda_prev = lam
    return SldaResult(selected=selected, steps=steps)
