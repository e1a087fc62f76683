"""Closed-vocabulary reconstruction and the semantic fidelity metrics.

Reconstruction scans the knowledge base by cosine and applies a two-threshold
rule: confident at or above tau_r, the "<FAILED>" token at or below tau_g,
flagged uncertain in between. Distortion blends embedding misalignment with
entity loss; entities come from a fixed rule set (capitalized runs, numbers,
month-day dates) so the metric needs no external model.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embedding_store import KnowledgeBase, cosine, l2_normalize, synthetic_embed
from .errors import DimensionError, InputError

FAILURE_TOKEN = "<FAILED>"

CHRF_MAX_ORDER = 6
CHRF_BETA = 2.0


@dataclass(frozen=True)
class ReconstructionResult:
    text: str
    kb_id: int | None
    score: float
    status: str  # confident | uncertain | failed


def reconstruct(
    z_hat: np.ndarray,
    kb: KnowledgeBase,
    tau_r: float,
    tau_g: float,
) -> ReconstructionResult:
    """Nearest-cosine lookup with the two-threshold decision rule."""
    if not tau_g < tau_r:
        raise InputError(f"need tau_g < tau_r, got {tau_g} >= {tau_r}")
    z_hat = np.asarray(z_hat, dtype=np.float64)
    if z_hat.shape != (kb.dimension,):
        raise DimensionError(f"vector shape {z_hat.shape} vs KB dimension {kb.dimension}")
    norm = np.linalg.norm(z_hat)
    if norm == 0.0:
        # A fully zeroed reconstruction carries no direction; treat as failure.
        return ReconstructionResult(text=FAILURE_TOKEN, kb_id=None, score=-1.0, status="failed")
    scores = kb.unit_matrix() @ (z_hat / norm)
    best = float(scores.max())
    tied = np.flatnonzero(scores == best)
    winner = min(tied, key=lambda i: kb[int(i)].id)
    score = float(np.clip(best, -1.0, 1.0))
    if score >= tau_r:
        status = "confident"
    elif score <= tau_g:
        return ReconstructionResult(text=FAILURE_TOKEN, kb_id=None, score=score, status="failed")
    else:
        status = "uncertain"
    entry = kb[int(winner)]
    return ReconstructionResult(text=entry.text, kb_id=entry.id, score=score, status=status)


def failure_embedding(kb: KnowledgeBase, seed: int = 0) -> np.ndarray:
    """Fixed stand-in vector for the failure token, orthogonalized to the KB mean."""
    v = synthetic_embed(FAILURE_TOKEN, kb.dimension, seed)
    mean = kb.unit_matrix().mean(axis=0)
    mean_norm = np.linalg.norm(mean)
    if mean_norm > 1e-9:
        unit_mean = mean / mean_norm
        v = v - np.dot(v, unit_mean) * unit_mean
        if np.linalg.norm(v) < 1e-9:
            return unit_mean  # pathological collinearity; any fixed unit vector works
    return l2_normalize(v)


# --- entity extraction -------------------------------------------------------

_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)?$")
# Capitalized word: leading uppercase, at least one lowercase, letters
# with optional internal hyphen/apostrophe. All-caps tokens (acronyms,
# the failure token) deliberately do not match.
_CAP_RE = re.compile(r"^[A-Z][A-Za-z'\-]*[a-z][A-Za-z'\-]*$")
_STRIP_RE = re.compile(r"^[^\w]+|[^\w]+$")

_MONTHS = {
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
}

# Common sentence starters: a capitalized token opening a sentence is not an
# entity when its lowercase form is one of these.
_SENTENCE_STARTERS = {
    "the", "a", "an", "in", "on", "at", "it", "he", "she", "they", "we",
    "you", "i", "this", "that", "these", "those", "there", "here", "and",
    "but", "or", "to", "of", "for", "with", "as", "by", "from", "after",
    "before", "when", "while", "if", "his", "her", "its", "their", "our",
    "my", "your", "is", "are", "was", "were", "be", "have", "has", "had",
    "do", "does", "did", "not", "no", "yes", "so", "then", "now", "what",
    "who", "how", "why", "where", "which", "some", "all", "one", "two",
}

_SENTENCE_END = re.compile(r"[.!?]$")


def extract_entities(text: str) -> set[str]:
    """Rule-based critical entities: capitalized runs, numbers, month-day dates."""
    raw_tokens = text.split()
    tokens = [_STRIP_RE.sub("", t) for t in raw_tokens]
    entities: set[str] = set()

    sentence_initial = True
    run: list[str] = []
    for raw, tok in zip(raw_tokens, tokens):
        is_cap = bool(tok) and bool(_CAP_RE.match(tok))
        if is_cap and sentence_initial and tok.lower() in _SENTENCE_STARTERS:
            is_cap = False
        if is_cap:
            run.append(tok)
        else:
            if run:
                entities.add(" ".join(run))
                run = []
        if tok and _NUMBER_RE.match(tok):
            entities.add(tok)
        sentence_initial = bool(_SENTENCE_END.search(raw))
    if run:
        entities.add(" ".join(run))

    # Month-name followed by a number forms a date entity.
    for prev, nxt in zip(tokens, tokens[1:]):
        if prev in _MONTHS and nxt and _NUMBER_RE.match(nxt):
            entities.add(f"{prev} {nxt}")
    return entities


def entity_loss(m: str, m_hat: str) -> float:
    """Weighted fraction of source entities missing from the reconstruction.

    All weights are 1; an entity-free source counts as vacuously preserved.
    """
    source = extract_entities(m)
    if not source:
        return 0.0
    recovered = extract_entities(m_hat)
    missing = sum(1 for e in source if e not in recovered)
    return missing / len(source)


def composite_distortion(cos_sim: float, ent_loss: float, alpha: float) -> float:
    """alpha-blend of embedding misalignment (1 - cos) and entity loss."""
    if not (0.0 <= alpha <= 1.0):
        raise InputError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * (1.0 - cos_sim) + (1.0 - alpha) * ent_loss


def semantic_distortion(m: str, m_hat: str, embed, alpha: float) -> float:
    """Composite distortion with embeddings produced by the given function."""
    if m == m_hat:
        cos_sim = 1.0
    else:
        cos_sim = cosine(embed(m), embed(m_hat))
    return composite_distortion(cos_sim, entity_loss(m, m_hat), alpha)


# --- chrF --------------------------------------------------------------------

def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i : i + n] for i in range(len(s) - n + 1))


def chrf(reference: str, hypothesis: str) -> float:
    """Character n-gram F-score, orders 1..6, recall-weighted (beta = 2).

    Precision and recall are averaged uniformly over the orders for which the
    reference has at least one n-gram; whitespace counts as characters.
    """
    if not reference and not hypothesis:
        return 1.0
    if not reference or not hypothesis:
        return 0.0
    precision_sum = 0.0
    recall_sum = 0.0
    n_orders = 0
    for n in range(1, CHRF_MAX_ORDER + 1):
        ref_ngrams = _char_ngrams(reference, n)
        ref_total = sum(ref_ngrams.values())
        if ref_total == 0:
            continue
        hyp_ngrams = _char_ngrams(hypothesis, n)
        hyp_total = sum(hyp_ngrams.values())
        common = sum((ref_ngrams & hyp_ngrams).values())
        precision_sum += common / hyp_total if hyp_total > 0 else 0.0
        recall_sum += common / ref_total
        n_orders += 1
    if n_orders == 0:
        return 0.0
    precision = precision_sum / n_orders
    recall = recall_sum / n_orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = CHRF_BETA ** 2
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall)
