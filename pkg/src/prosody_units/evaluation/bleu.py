"""Corpus-level BLEU with clipped n-gram precisions and brevity penalty."""

import math
import re
from collections import Counter
from dataclasses import dataclass

_PUNCT = re.compile(r"([^\w\s])", re.UNICODE)


def tokenize(line, lowercase=False):
    """Whitespace split after separating punctuation; optional lowercasing."""
    if lowercase:
        line = line.lower()
    return _PUNCT.sub(r" \1 ", line).split()


@dataclass
class TokenizedCorpus:
    """Parallel hypothesis/reference token sequences."""

    hypotheses: list
    references: list

    def __post_init__(self):
        if len(self.hypotheses) != len(self.references):
            raise ValueError(
                f"corpus lists must be parallel: {len(self.hypotheses)} hypotheses "
                f"vs {len(self.references)} references"
            )
        for side in (self.hypotheses, self.references):
            for seg in side:
                if any(not tok for tok in seg):
                    raise ValueError("tokens must be non-empty strings")

    def __len__(self):
        return len(self.hypotheses)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(corpus, max_n=4):
    """Corpus BLEU in [0, 100].

    Clipped n-gram counts are summed over segments before taking ratios; the
    brevity penalty is exp(min(0, 1 - ref_len/hyp_len)) on corpus totals.  A
    zero precision at any order gives a score of 0.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    clipped = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(corpus.hypotheses, corpus.references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            counts = _ngrams(hyp, n)
            if not counts:
                continue
            ref_counts = _ngrams(ref, n)
            clipped[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in counts.items()
            )
            total[n - 1] += sum(counts.values())
    if hyp_len == 0 or any(t == 0 for t in total) or any(c == 0 for c in clipped):
        return 0.0
    log_precision = sum(math.log(c / t) for c, t in zip(clipped, total)) / max_n
    brevity = min(0.0, 1.0 - ref_len / hyp_len)
    return 100.0 * math.exp(brevity + log_precision)
