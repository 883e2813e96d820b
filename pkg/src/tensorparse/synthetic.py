"""Toy-grammar corpora for tests, demos and the blankout harness.

Sentences follow ``NP VERB [NP] [PP] [ADV]`` with UD-style heads: the verb
attaches to the root, nouns to the verb, determiners/adjectives/adpositions
to their noun. Source languages are word-order permutations of the target
with noisy scores and lossy word alignments, so projecting them exercises
the real pipeline and leaves genuinely missing cells.
"""
import numpy as np

from .decoder import heads_to_matrix
from .encoder import self_arc_mask
from .io import EmbeddingTable, ScoredSentence, Sentence
from .projection import SentenceAlignment, SourceCorpus, WordAlignment, project, standardize

LEXICON = {
    "DET": ["the", "a", "this", "that", "every"],
    "ADJ": ["big", "small", "red", "old", "new", "quiet", "green"],
    "NOUN": ["dog", "cat", "man", "house", "tree", "river", "child", "bird", "stone"],
    "VERB": ["sees", "likes", "finds", "takes", "sleeps", "knows"],
    "ADP": ["in", "on", "with", "near"],
    "ADV": ["today", "slowly", "often"],
}


def _noun_phrase(rng, max_adj=2):
    words = []
    if rng.random() < 0.8:
        words.append("DET")
    words.extend(["ADJ"] * int(rng.integers(0, max_adj + 1)))
    words.append("NOUN")
    return words


def generate_sentence(rng, max_len=12):
    """One toy sentence as ``(tokens, pos, heads)``."""
    while True:
        pos, heads = [], []

        def add_np(attach_to):
            tags = _noun_phrase(rng)
            start = len(pos)
            noun = start + len(tags)  # 1-based index of the noun
            for tag in tags:
                pos.append(tag)
                heads.append(attach_to if tag == "NOUN" else noun)
            return noun

        subject_tags = _noun_phrase(rng)
        noun = len(subject_tags)
        verb_slot = noun + 1
        for tag in subject_tags:
            pos.append(tag)
            heads.append(verb_slot if tag == "NOUN" else noun)
        pos.append("VERB")
        heads.append(0)
        if rng.random() < 0.7:
            add_np(verb_slot)
        if rng.random() < 0.5:
            pos.append("ADP")
            heads.append(None)
            adp = len(pos)
            pp_noun = add_np(verb_slot)
            heads[adp - 1] = pp_noun
        if rng.random() < 0.3:
            pos.append("ADV")
            heads.append(verb_slot)
        if len(pos) <= max_len:
            break
    tokens = [LEXICON[tag][int(rng.integers(len(LEXICON[tag])))] for tag in pos]
    return tokens, pos, heads


def generate_treebank(n, seed, max_len=12, prefix="t"):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        tokens, pos, heads = generate_sentence(rng, max_len)
        out.append(Sentence(f"{prefix}{k + 1}", tokens, pos, heads))
    return out


def generate_embeddings(width, seed, oov_rate=0.0):
    """Vectors clustered by POS; a share ``oov_rate`` of words is left out (unknown)."""
    rng = np.random.default_rng(seed)
    vectors = {}
    for tag, words in LEXICON.items():
        center = rng.normal(0.0, 1.0, width)
        for word in words:
            vec = center + rng.normal(0.0, 0.5, width)
            if rng.random() >= oov_rate:
                vectors[word] = vec
    return EmbeddingTable(vectors, width)


def write_embeddings(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in table.vectors.items():
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def make_source_language(targets, language, seed, noise=1.0, link_rate=0.8):
    """A permuted-order source corpus parsed by a noisy 'parser', plus its alignments.

    Returns ``(SourceCorpus, SentenceAlignment, WordAlignment)``.
    """
    rng = np.random.default_rng(seed)
    sentences, triples, links = [], [], {}
    for t in targets:
        w = len(t.tokens)
        order = rng.permutation(w)  # source position k holds target token order[k]
        position = np.empty(w, dtype=int)
        position[order] = np.arange(w)
        src_heads = [0 if t.heads[order[k]] == 0 else int(position[t.heads[order[k]] - 1]) + 1
                     for k in range(w)]
        raw = 3.0 * heads_to_matrix(src_heads) + rng.normal(0.0, noise, (w, w + 1))
        raw[self_arc_mask(w)] = 0.0
        sid = f"{language}-{t.id}"
        sentences.append(ScoredSentence(sid, [f"{language}_{t.tokens[i]}" for i in order],
                                        [t.pos[i] for i in order], raw))
        triples.append((sid, t.id, float(rng.uniform(0.3, 1.0))))
        pairs = []
        for k in range(w):
            if rng.random() < link_rate:
                pairs.append((k + 1, int(order[k]) + 1, float(rng.uniform(0.5, 1.0))))
        links[(sid, t.id)] = pairs
    return (SourceCorpus(language, sentences), SentenceAlignment(triples),
            WordAlignment(links))


def projected_corpus(targets, n_sources=2, seed=0, noise=1.0, link_rate=0.8):
    """Project ``n_sources`` synthetic source languages onto ``targets``."""
    sources, saligns, waligns = [], [], []
    for k in range(n_sources):
        corpus, sa, wa = make_source_language(targets, f"src{k + 1}", seed + 1000 * (k + 1),
                                              noise, link_rate)
        sources.append(standardize(corpus))
        saligns.append(sa)
        waligns.append(wa)
    return project(targets, sources, saligns, waligns)
