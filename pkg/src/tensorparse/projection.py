"""Multi-source projection of edge scores across sentence and word alignments.

Scores are indexed like parse matrices: ``scores[d - 1, h]`` is the score of
head ``h`` (0 = root) for dependent token ``d`` (1-based). A word alignment
for a sentence pair is held as a ``(ws+1) x (wt+1)`` confidence matrix whose
row/column 0 is the root; root aligns to root with confidence 1.
"""
import math
from dataclasses import dataclass

import numpy as np

from .encoder import self_arc_mask
from .errors import DataError, DegenerateCorpusError
from .io import ScoredSentence


@dataclass
class SourceCorpus:
    language: str
    sentences: list

    def by_id(self):
        return {s.id: s for s in self.sentences}


class SentenceAlignment:
    """Confidences ``A(source, target)``; absent pairs have confidence 0.

    ``triples`` holds ``(source_id, target_id, confidence)`` with an optional
    fourth element giving the line number for error messages.
    """

    def __init__(self, triples, path=None):
        self.path = path
        self.by_target = {}
        for t in triples:
            src, tgt, conf = t[0], t[1], float(t[2])
            where = f"{path or '<sentence alignment>'}:{t[3]}" if len(t) > 3 else \
                (path or "<sentence alignment>")
            if not 0.0 <= conf <= 1.0:
                raise DataError(f"{where}: confidence {conf} outside [0, 1]")
            self.by_target.setdefault(tgt, []).append((src, conf, where))

    def sources_for(self, target_id):
        return self.by_target.get(target_id, [])


class WordAlignment:
    """Per sentence pair token links ``(i, j, confidence)``, 1-based, 0 = root."""

    def __init__(self, links, path=None):
        self.path = path
        self.links = {}
        for key, value in links.items():
            if isinstance(value, tuple) and len(value) == 2 and isinstance(value[1], int):
                pairs, line = value
                where = f"{path or '<word alignment>'}:{line}"
            else:
                pairs, where = value, path or "<word alignment>"
            self.links[key] = (list(pairs), where)

    def matrix(self, source_id, target_id, ws, wt):
        w = np.zeros((ws + 1, wt + 1))
        w[0, 0] = 1.0
        pairs, where = self.links.get((source_id, target_id), ((), None))
        for i, j, conf in pairs:
            if not (1 <= i <= ws and 1 <= j <= wt):
                if (i, j) == (0, 0):
                    continue
                raise DataError(f"{where}: link {i}-{j} out of range for sentence pair "
                                f"{source_id}/{target_id} ({ws} x {wt} tokens)")
            if not 0.0 <= conf <= 1.0:
                raise DataError(f"{where}: confidence {conf} outside [0, 1]")
            w[i, j] = conf
        return w


def standardize(corpus):
    """Rescale all unmasked scores of a language, pooled, to mean 0 and population std 1."""
    pooled = np.concatenate([s.scores[~self_arc_mask(len(s.tokens))]
                             for s in corpus.sentences]) if corpus.sentences else np.empty(0)
    if pooled.size < 2 or np.all(pooled == pooled[0]):
        raise DegenerateCorpusError(
            f"language {corpus.language}: scores have zero variance; cannot standardize")
    mu, sigma = pooled.mean(), pooled.std()
    out = []
    for s in corpus.sentences:
        mask = self_arc_mask(len(s.tokens))
        scores = np.where(mask, 0.0, (s.scores - mu) / sigma)
        out.append(ScoredSentence(s.id, list(s.tokens), list(s.pos), scores))
    return SourceCorpus(corpus.language, out)


def edge_vote(score, head_conf, dep_conf):
    """Vote of one source edge for one target edge: ``W(u_s,u_t) * W(v_s,v_t) * score``."""
    return head_conf * dep_conf * score


def sentence_vote(source_scores, alignment, target_edge):
    """Highest edge vote any source edge casts for ``target_edge = (dependent, head)``.

    ``alignment`` is the ``(ws+1) x (wt+1)`` confidence matrix of the pair.
    """
    dt, ht = target_edge
    ws = source_scores.shape[0]
    best = -math.inf
    for ds in range(1, ws + 1):
        for hs in range(ws + 1):
            if hs == ds:
                continue
            best = max(best, edge_vote(source_scores[ds - 1, hs], alignment[hs, ht],
                                       alignment[ds, dt]))
    return best


def sentence_votes(source_scores, alignment):
    """:func:`sentence_vote` for every target cell at once; returns ``wt x (wt+1)``."""
    ws = source_scores.shape[0]
    dep = alignment[1:, 1:]  # (ws, wt): source dependents never align to the root
    votes = dep[:, None, :, None] * alignment[None, :, None, :] \
        * source_scores[:, :, None, None]
    votes = np.where(self_arc_mask(ws)[:, :, None, None], -np.inf, votes)
    return votes.max(axis=(0, 1))


def project_sentence(target, sources, sent_aligns, word_aligns, lookups=None):
    """Projected score matrix of one target sentence (all zeros when nothing aligns)."""
    wt = len(target.tokens)
    total = np.zeros((wt, wt + 1))
    z = 0.0
    if lookups is None:
        lookups = [c.by_id() for c in sources]
    for by_id, salign, walign in zip(lookups, sent_aligns, word_aligns):
        for src_id, conf, where in salign.sources_for(target.id):
            src = by_id.get(src_id)
            if src is None:
                raise DataError(f"{where}: unknown source sentence id {src_id!r}")
            z += conf
            if conf == 0.0:
                continue
            w = walign.matrix(src_id, target.id, len(src.tokens), wt)
            total += conf * sentence_votes(src.scores, w)
    if z == 0.0:
        return np.zeros((wt, wt + 1))
    scores = total / z
    scores[self_arc_mask(wt)] = 0.0
    return scores


def project(targets, sources, sent_aligns, word_aligns):
    """Project standardized source scores onto every target sentence.

    ``sent_aligns`` and ``word_aligns`` are parallel to ``sources``: one
    :class:`SentenceAlignment` and one :class:`WordAlignment` per language.
    Output order follows ``targets``.
    """
    if not (len(sources) == len(sent_aligns) == len(word_aligns)):
        raise ValueError("need one sentence and one word alignment per source language")
    target_ids = {t.id for t in targets}
    for salign in sent_aligns:
        for tgt, entries in salign.by_target.items():
            if tgt not in target_ids:
                raise DataError(f"{entries[0][2]}: unknown target sentence id {tgt!r}")
    lookups = [c.by_id() for c in sources]
    out = []
    for t in targets:
        scores = project_sentence(t, sources, sent_aligns, word_aligns, lookups)
        out.append(ScoredSentence(t.id, list(t.tokens), list(t.pos), scores))
    return out


def blankout(instances, fraction, seed):
    """Zero exactly ``floor(fraction * N)`` of the N nonzero unmasked cells, pooled.

    Cells are picked by a seeded shuffle, so the result is deterministic per seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"blankout fraction must be in [0, 1], got {fraction}")
    cells = []
    for k, inst in enumerate(instances):
        valid = ~self_arc_mask(len(inst.tokens))
        rows, cols = np.nonzero(valid & (inst.scores != 0.0))
        cells.extend((k, r, c) for r, c in zip(rows, cols))
    count = math.floor(round(fraction * len(cells), 9))
    chosen = np.random.default_rng(seed).permutation(len(cells))[:count]
    out = [ScoredSentence(i.id, list(i.tokens), list(i.pos), i.scores.copy()) for i in instances]
    for idx in chosen:
        k, r, c = cells[idx]
        out[k].scores[r, c] = 0.0
    return out


def subsample(instances, n, seed):
    """``min(n, len(instances))`` instances chosen by a seeded shuffle."""
    if n < 1:
        raise ValueError(f"subsample size must be at least 1, got {n}")
    order = np.random.default_rng(seed).permutation(len(instances))
    return [instances[i] for i in order[:n]]
