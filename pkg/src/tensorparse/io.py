"""Readers and writers: CoNLL-U treebanks, embeddings, score corpora, alignments."""
import json
from dataclasses import dataclass, field

import numpy as np

from .encoder import self_arc_mask
from .errors import DataError, ParseError

CONLLU_COLUMNS = 10


@dataclass
class Sentence:
    """A tokenized sentence with POS tags and (optionally) gold heads.

    ``columns`` keeps the raw CoNLL-U fields of each token so rewriting a file
    preserves everything except the HEAD column.
    """

    id: str
    tokens: list
    pos: list
    heads: list = None
    columns: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.pos) != len(self.tokens):
            raise DataError(f"sentence {self.id}: {len(self.pos)} tags for "
                            f"{len(self.tokens)} tokens")
        if self.heads is not None:
            w = len(self.tokens)
            if len(self.heads) != w:
                raise DataError(f"sentence {self.id}: {len(self.heads)} heads for {w} tokens")
            for h in self.heads:
                if not 0 <= h <= w:
                    raise DataError(f"sentence {self.id}: head {h} out of range 0..{w}")

    def __len__(self):
        return len(self.tokens)


# -- CoNLL-U -------------------------------------------------------------------

def _finish(sentences, sent_id, rows, path, line_no):
    ids = [r[0] for r in rows]
    expected = [str(i) for i in range(1, len(rows) + 1)]
    if ids != expected:
        raise ParseError(f"token ids {ids} are not 1..{len(rows)}", path, line_no)
    heads = [r[6] for r in rows]
    if all(h == "_" for h in heads):
        parsed = None
    else:
        try:
            parsed = [int(h) for h in heads]
        except ValueError:
            raise ParseError(f"non-integer head in {heads}", path, line_no) from None
    sid = sent_id if sent_id is not None else str(len(sentences) + 1)
    try:
        sentences.append(Sentence(sid, [r[1] for r in rows], [r[3] for r in rows],
                                  parsed, [list(r) for r in rows]))
    except DataError as exc:
        raise ParseError(str(exc), path, line_no) from None


def read_treebank(path):
    """Parse a CoNLL-U file; comments, multi-word ranges and empty nodes are skipped.

    A sentence whose HEAD column is entirely ``_`` is read with ``heads=None``.
    """
    sentences = []
    rows, sent_id, start = [], None, None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if rows:
                    _finish(sentences, sent_id, rows, path, start)
                rows, sent_id = [], None
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key.strip() == "sent_id":
                    sent_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != CONLLU_COLUMNS:
                raise ParseError(f"expected {CONLLU_COLUMNS} tab-separated columns, "
                                 f"got {len(cols)}", path, line_no)
            if "-" in cols[0] or "." in cols[0]:
                continue
            if not cols[0].isdigit():
                raise ParseError(f"bad token id {cols[0]!r}", path, line_no)
            if cols[6] != "_" and not cols[6].lstrip("-").isdigit():
                raise ParseError(f"non-integer head {cols[6]!r}", path, line_no)
            if not rows:
                start = line_no
            rows.append(cols)
    if rows:
        _finish(sentences, sent_id, rows, path, start)
    return sentences


def write_treebank(sentences, predicted_heads, path):
    """Write CoNLL-U with the HEAD column taken from ``predicted_heads``.

    ``predicted_heads`` may be None to keep each sentence's own heads.
    """
    if predicted_heads is not None and len(predicted_heads) != len(sentences):
        raise ValueError(f"{len(predicted_heads)} head lists for {len(sentences)} sentences")
    with open(path, "w", encoding="utf-8") as fh:
        for k, sent in enumerate(sentences):
            heads = sent.heads if predicted_heads is None else predicted_heads[k]
            if heads is not None and len(heads) != len(sent):
                raise ValueError(f"sentence {sent.id}: {len(heads)} heads for {len(sent)} tokens")
            fh.write(f"# sent_id = {sent.id}\n")
            for i in range(len(sent)):
                if sent.columns is not None:
                    cols = list(sent.columns[i])
                else:
                    cols = [str(i + 1), sent.tokens[i], "_", sent.pos[i]] + ["_"] * 6
                cols[0], cols[1], cols[3] = str(i + 1), sent.tokens[i], sent.pos[i]
                cols[6] = "_" if heads is None else str(int(heads[i]))
                fh.write("\t".join(cols) + "\n")
            fh.write("\n")


# -- embeddings and features ---------------------------------------------------

class EmbeddingTable:
    """Fixed word vectors; unknown words map to the zero vector."""

    def __init__(self, vectors, width):
        self.vectors = vectors
        self.width = width

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, word):
        return word in self.vectors

    def lookup(self, word):
        vec = self.vectors.get(word)
        return np.zeros(self.width) if vec is None else vec


def read_embeddings(path):
    """Read ``word v1 ... vk`` lines. A leading ``count width`` header is skipped."""
    vectors = {}
    width = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                raise ParseError("embedding line has no vector", path, line_no)
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric embedding value", path, line_no) from None
            if width is None:
                width = len(vec)
            elif len(vec) != width:
                raise ParseError(f"vector width {len(vec)}, expected {width}", path, line_no)
            vectors[parts[0]] = vec
    if width is None:
        raise ParseError("no embeddings found; width undefined", path)
    return EmbeddingTable(vectors, width)


@dataclass
class FeatureConfig:
    """What a model's input rows are made of; frozen at training time."""

    embedding_width: int
    pos_vocab: list
    use_pos: bool = True

    @property
    def width(self):
        return self.embedding_width + (len(self.pos_vocab) if self.use_pos else 0)

    @classmethod
    def from_sentences(cls, sentences, embedding_width, use_pos=True):
        tags = sorted({t for s in sentences for t in s.pos})
        return cls(embedding_width, tags, use_pos)


def featurize(sentence, emb, pos_vocab, use_pos=True):
    """Rows ``embedding(token) (+) onehot(pos)``; unknown words and tags give zero blocks."""
    w = len(sentence.tokens)
    if not use_pos:
        pos_vocab = ()
    index = {tag: k for k, tag in enumerate(pos_vocab)}
    out = np.zeros((w, emb.width + len(pos_vocab)))
    for i, (tok, tag) in enumerate(zip(sentence.tokens, sentence.pos)):
        out[i, :emb.width] = emb.lookup(tok)
        k = index.get(tag)
        if k is not None:
            out[i, emb.width + k] = 1.0
    return out


# -- score corpora -------------------------------------------------------------

@dataclass
class ScoredSentence:
    """A sentence paired with a real-valued ``w x (w+1)`` edge-score matrix.

    Used both for source-language parser output and for projected target
    instances. Self-arc cells are ignored and stored as 0.
    """

    id: str
    tokens: list
    pos: list
    scores: np.ndarray

    def __post_init__(self):
        w = len(self.tokens)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (w, w + 1):
            raise DataError(f"record {self.id}: scores have shape {self.scores.shape}, "
                            f"expected {(w, w + 1)}")
        if len(self.pos) != w:
            raise DataError(f"record {self.id}: {len(self.pos)} tags for {w} tokens")

    @property
    def missing_fraction(self):
        """Share of unmasked cells that are exactly 0."""
        valid = ~self_arc_mask(len(self.tokens))
        return float(np.count_nonzero(self.scores[valid] == 0.0)) / valid.sum()


ProjectedInstance = ScoredSentence


def _score_rows(scores):
    w = scores.shape[0]
    rows = []
    for i in range(w):
        rows.append([None if j == i + 1 else float(scores[i, j]) for j in range(w + 1)])
    return rows


def write_score_corpus(instances, path):
    """One JSON object per line; self-arc cells written as null.

    Floats are written with ``repr`` (shortest string that round-trips exactly).
    """
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            record = {"id": inst.id, "tokens": list(inst.tokens), "pos": list(inst.pos),
                      "scores": _score_rows(inst.scores)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_score_corpus(path):
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rid, tokens, pos, rows = rec["id"], rec["tokens"], rec["pos"], rec["scores"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"bad score record: {exc}", path, line_no) from None
            w = len(tokens)
            if len(rows) != w or any(len(r) != w + 1 for r in rows):
                raise ParseError(f"record {rid}: scores are not {w} x {w + 1}", path, line_no)
            try:
                scores = np.array([[0.0 if v is None else float(v) for v in r] for r in rows])
            except (TypeError, ValueError):
                raise ParseError(f"record {rid}: non-numeric score", path, line_no) from None
            if not np.all(np.isfinite(scores)):
                raise ParseError(f"record {rid}: non-finite score", path, line_no)
            try:
                instances.append(ScoredSentence(str(rid), tokens, pos, scores))
            except DataError as exc:
                raise ParseError(str(exc), path, line_no) from None
    return instances


# -- alignments ----------------------------------------------------------------

def read_sentence_alignments(path):
    """``source_id<TAB>target_id<TAB>confidence`` lines -> list of triples."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}",
                                 path, line_no)
            try:
                conf = float(parts[2])
            except ValueError:
                raise ParseError(f"bad confidence {parts[2]!r}", path, line_no) from None
            if not 0.0 <= conf <= 1.0:
                raise ParseError(f"confidence {conf} outside [0, 1]", path, line_no)
            out.append((parts[0], parts[1], conf, line_no))
    return out


def read_word_alignments(path):
    """``source_id<TAB>target_id<TAB>i-j:conf ...`` lines, 1-based indices (0 = root).

    Returns ``{(source_id, target_id): ([(i, j, conf), ...], line_no)}``.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) not in (2, 3):
                raise ParseError("expected source_id, target_id and links", path, line_no)
            links = []
            for item in (parts[2].split() if len(parts) == 3 else []):
                try:
                    pair, conf = item.split(":")
                    i, j = pair.split("-")
                    link = (int(i), int(j), float(conf))
                except ValueError:
                    raise ParseError(f"bad link {item!r}", path, line_no) from None
                if link[0] < 0 or link[1] < 0 or not 0.0 <= link[2] <= 1.0:
                    raise ParseError(f"bad link {item!r}", path, line_no)
                links.append(link)
            out[(parts[0], parts[1])] = (links, line_no)
    return out


def write_sentence_alignments(triples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for src, tgt, conf in triples:
            fh.write(f"{src}\t{tgt}\t{conf!r}\n")


def write_word_alignments(alignments, path):
    """``alignments`` maps ``(source_id, target_id)`` to ``[(i, j, conf), ...]``."""
    with open(path, "w", encoding="utf-8") as fh:
        for (src, tgt), links in alignments.items():
            body = " ".join(f"{i}-{j}:{c!r}" for i, j, c in links)
            fh.write(f"{src}\t{tgt}\t{body}\n")
