"""Caption evaluation: corpus BLEU@4, ROUGE_L, CIDEr, and exact/stem METEOR.

All scores are reported on a 0-100 scale except CIDEr, whose native value
lives on 0-10 (mean tf-idf cosine over n-gram orders, times ten); the
report carries both the native value and a x100 companion. Learned
metrics (BERTScore, SPICE) are deliberately absent and surface as
explicit "unsupported" markers instead of silently missing columns.
"""
from __future__ import annotations

import math
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ._porter import stem

MAX_NGRAM = 4
ROUGE_BETA = 1.2
CIDER_D_SIGMA = 6.0
_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


class EmptyTextError(ValueError):
    """Text normalizes to zero tokens."""


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation to spaces, split on whitespace."""
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    if not tokens:
        raise EmptyTextError(f"no tokens left after normalizing {text!r}")
    return tokens


@dataclass
class CaptionRecord:
    id: str
    references: list[str]
    hypothesis: str

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"record {self.id!r} has no references")
        tokenize(self.hypothesis)
        for ref in self.references:
            tokenize(ref)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


# ---------------------------------------------------------------- BLEU@4

def bleu4(corpus: Sequence[CaptionRecord], smooth_eps: float = 0.0) -> float:
    """Corpus BLEU: geometric mean of clipped n-gram precisions (n=1..4)
    times the brevity penalty, scaled to 0-100.

    With smooth_eps=0 (default) a zero corpus-level precision at any order
    zeroes the whole score; a positive epsilon replaces empty clipped
    counts instead.
    """
    if not corpus:
        raise ValueError("empty corpus")
    clipped = [0] * MAX_NGRAM
    totals = [0] * MAX_NGRAM
    hyp_len = 0
    ref_len = 0
    for rec in corpus:
        hyp = tokenize(rec.hypothesis)
        refs = [tokenize(r) for r in rec.references]
        hyp_len += len(hyp)
        # closest reference length; ties go to the shorter one
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
        for n in range(1, MAX_NGRAM + 1):
            counts = _ngram_counts(hyp, n)
            max_ref = Counter()
            for r in refs:
                for gram, c in _ngram_counts(r, n).items():
                    max_ref[gram] = max(max_ref[gram], c)
            clipped[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            totals[n - 1] += max(0, len(hyp) - n + 1)
    log_sum = 0.0
    for n in range(MAX_NGRAM):
        if totals[n] == 0:
            return 0.0
        num = clipped[n] if clipped[n] > 0 else smooth_eps
        if num <= 0:
            return 0.0
        log_sum += math.log(num / totals[n]) / MAX_NGRAM
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum)


# --------------------------------------------------------------- ROUGE_L

def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _rouge_record(rec: CaptionRecord, beta: float) -> float:
    hyp = tokenize(rec.hypothesis)
    best = 0.0
    for ref_text in rec.references:
        ref = tokenize(ref_text)
        lcs = _lcs_len(ref, hyp)
        if lcs == 0:
            continue
        p = lcs / len(hyp)
        r = lcs / len(ref)
        f = (1 + beta ** 2) * p * r / (r + beta ** 2 * p)
        best = max(best, f)
    return best


def rouge_l(corpus: Sequence[CaptionRecord], beta: float = ROUGE_BETA) -> float:
    """Mean per-record LCS F-measure (beta-weighted, max over references), x100."""
    if not corpus:
        raise ValueError("empty corpus")
    return 100.0 * sum(_rouge_record(rec, beta) for rec in corpus) / len(corpus)


# ----------------------------------------------------------------- CIDEr

def _tfidf_vector(counts: Counter, idf: dict) -> tuple[dict, float]:
    vec = {g: c * idf.get(g, idf["__unseen__"]) for g, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def _cider_scores(corpus: Sequence[CaptionRecord], variant: str,
                  sigma: float) -> list[float]:
    n_docs = len(corpus)
    ref_tokens = [[tokenize(r) for r in rec.references] for rec in corpus]
    hyp_tokens = [tokenize(rec.hypothesis) for rec in corpus]

    idf_per_n: list[dict] = []
    for n in range(1, MAX_NGRAM + 1):
        df = Counter()
        for refs in ref_tokens:
            seen = set()
            for r in refs:
                seen.update(_ngram_counts(r, n))
            df.update(seen)
        idf = {g: math.log(n_docs / d) for g, d in df.items()}
        idf["__unseen__"] = math.log(n_docs)  # df clamped to 1
        idf_per_n.append(idf)

    scores = []
    for refs, hyp in zip(ref_tokens, hyp_tokens):
        per_n = []
        for n in range(1, MAX_NGRAM + 1):
            idf = idf_per_n[n - 1]
            hvec, hnorm = _tfidf_vector(_ngram_counts(hyp, n), idf)
            acc = 0.0
            for r in refs:
                rvec, rnorm = _tfidf_vector(_ngram_counts(r, n), idf)
                if hnorm == 0.0 or rnorm == 0.0:
                    continue
                if variant == "cider-d":
                    dot = sum(min(hv, rvec.get(g, 0.0)) * rvec.get(g, 0.0)
                              for g, hv in hvec.items())
                    dot /= hnorm * rnorm
                    dot *= math.exp(-((len(hyp) - len(r)) ** 2) / (2 * sigma ** 2))
                else:
                    dot = sum(hv * rvec.get(g, 0.0) for g, hv in hvec.items())
                    dot /= hnorm * rnorm
                acc += dot
            per_n.append(acc / len(refs))
        scores.append(10.0 * sum(per_n) / MAX_NGRAM)
    return scores


def cider(corpus: Sequence[CaptionRecord], variant: str = "cider",
          sigma: float = CIDER_D_SIGMA) -> float:
    """Mean tf-idf n-gram cosine (orders 1..4) against the references, x10.

    idf comes from the reference side of the corpus, so a single-record
    corpus scores 0 by construction. variant="cider-d" switches to
    count-clipped numerators with a length gaussian.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if variant not in ("cider", "cider-d"):
        raise ValueError(f"unknown CIDEr variant {variant!r}")
    scores = _cider_scores(corpus, variant, sigma)
    return sum(scores) / len(scores)


# ---------------------------------------------------------------- METEOR

def _compatibility(hyp: list[str], ref: list[str]) -> list[list[int]]:
    hyp_stems = [stem(w) for w in hyp]
    ref_stems = [stem(w) for w in ref]
    return [
        [j for j in range(len(ref)) if hyp[i] == ref[j] or hyp_stems[i] == ref_stems[j]]
        for i in range(len(hyp))
    ]


def _max_matches(cands: list[list[int]], n_ref: int) -> tuple[int, list[tuple[int, int]]]:
    rows, cols = [], []
    for i, js in enumerate(cands):
        rows.extend([i] * len(js))
        cols.extend(js)
    if not rows:
        return 0, []
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(cands), n_ref))
    match = maximum_bipartite_matching(graph, perm_type="column")
    pairs = [(i, int(j)) for i, j in enumerate(match) if j >= 0]
    return len(pairs), pairs


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    pairs = sorted(pairs)
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def _min_chunk_alignment(cands: list[list[int]], target: int, seed_chunks: int,
                         node_cap: int = 200_000) -> int:
    """Minimum chunk count over all maximum matchings (branch and bound)."""
    n_hyp = len(cands)
    # how many of positions i.. could still match, ignoring ref conflicts
    max_rem = [0] * (n_hyp + 1)
    for i in range(n_hyp - 1, -1, -1):
        max_rem[i] = max_rem[i + 1] + (1 if cands[i] else 0)

    best = seed_chunks
    nodes = 0

    def dfs(i: int, used: int, matched: int, last: tuple[int, int] | None,
            chunks: int) -> None:
        nonlocal best, nodes
        if chunks >= best or nodes > node_cap:
            return
        if matched + max_rem[i] < target:
            return
        if matched == target:
            best = min(best, chunks)
            return
        if i == n_hyp:
            return
        nodes += 1
        options = [j for j in cands[i] if not (used >> j) & 1]
        # try run continuations first so good bounds appear early
        if last is not None and last[0] == i - 1:
            options.sort(key=lambda j: (j != last[1] + 1, j))
        for j in options:
            extends = last is not None and last[0] == i - 1 and j == last[1] + 1
            dfs(i + 1, used | (1 << j), matched + 1, (i, j),
                chunks if extends else chunks + 1)
        dfs(i + 1, used, matched, last, chunks)

    dfs(0, 0, 0, None, 0)
    return best


def _meteor_pair(hyp: list[str], ref: list[str]) -> float:
    cands = _compatibility(hyp, ref)
    matches, pairs = _max_matches(cands, len(ref))
    if matches == 0:
        return 0.0
    chunks = _min_chunk_alignment(cands, matches, _count_chunks(pairs))
    p = matches / len(hyp)
    r = matches / len(ref)
    f_mean = 10.0 * p * r / (p + 9.0 * r)
    penalty = 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)


def _meteor_record(rec: CaptionRecord) -> float:
    hyp = tokenize(rec.hypothesis)
    return max(_meteor_pair(hyp, tokenize(r)) for r in rec.references)


def meteor_exact(corpus: Sequence[CaptionRecord]) -> float:
    """Exact/stem unigram METEOR: alignment maximizes matches then minimizes
    chunks; per-record scores are averaged and scaled to 0-100."""
    if not corpus:
        raise ValueError("empty corpus")
    return 100.0 * sum(_meteor_record(rec) for rec in corpus) / len(corpus)


# ---------------------------------------------------------------- report

@dataclass
class MetricReport:
    bleu4: float
    rouge_l: float
    cider: float
    cider_x100: float
    meteor_exact: float
    n_records: int
    per_record: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bleu4": self.bleu4,
            "rouge_l": self.rouge_l,
            "cider": self.cider,
            "cider_x100": self.cider_x100,
            "meteor_exact": self.meteor_exact,
            "bertscore": "unsupported",
            "spice": "unsupported",
            "n_records": self.n_records,
            "per_record": self.per_record,
        }


def evaluate_corpus(corpus: Sequence[CaptionRecord], smooth_eps: float = 0.0,
                    cider_variant: str = "cider") -> MetricReport:
    """Score a corpus with every supported metric, per record and overall."""
    if not corpus:
        raise ValueError("empty corpus")
    cider_per = _cider_scores(corpus, cider_variant, CIDER_D_SIGMA)
    per_record = []
    for rec, cd in zip(corpus, cider_per):
        per_record.append({
            "id": rec.id,
            "bleu4": bleu4([rec], smooth_eps),
            "rouge_l": 100.0 * _rouge_record(rec, ROUGE_BETA),
            "cider": cd,
            "meteor_exact": 100.0 * _meteor_record(rec),
        })
    native = sum(cider_per) / len(cider_per)
    return MetricReport(
        bleu4=bleu4(corpus, smooth_eps),
        rouge_l=rouge_l(corpus),
        cider=native,
        cider_x100=100.0 * native,
        meteor_exact=meteor_exact(corpus),
        n_records=len(corpus),
        per_record=per_record,
    )
