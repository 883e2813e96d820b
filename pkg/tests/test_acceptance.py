"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the summary lines appear at
the end of the session) or directly with ``python tests/test_acceptance.py``.
"""
import contextlib
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from gradcheck import max_relative_error, numeric_gradients  # noqa: E402
from oracles import brute_force_best, nested_loop_projection, random_projection_setup  # noqa: E402

from tensorparse import io  # noqa: E402
from tensorparse.autodiff import compute_gradients  # noqa: E402
from tensorparse.cli import main  # noqa: E402
from tensorparse.decoder import decode, heads_to_matrix, matrix_to_heads, tree_score  # noqa: E402
from tensorparse.encoder import (ModelParams, score_sentence, self_arc_mask,  # noqa: E402
                                 tensor_lstm_4d)
from tensorparse.losses import cross_entropy_loss, mse_loss, softmax_rows  # noqa: E402
from tensorparse.model import ParserModel, load_model, save_model  # noqa: E402
from tensorparse.projection import SourceCorpus, project, standardize  # noqa: E402
from tensorparse.synthetic import generate_embeddings, generate_treebank  # noqa: E402
from tensorparse.tensor import row_reverse, tensor_transpose  # noqa: E402
from tensorparse.trainer import (Example, OptimizerState, TrainConfig,  # noqa: E402
                                 add_gradient_noise, clip_gradients, evaluate_uas,
                                 global_norm, init_model, rmsprop_step, train)

RESULTS = {}


@contextlib.contextmanager
def criterion(number, title, limit=None):
    """Record and print one PASS/FAIL line; failures re-raise for pytest."""
    started = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - started
        if limit is not None and elapsed >= limit:
            raise AssertionError(f"took {elapsed:.1f} s, limit {limit} s")
    except BaseException as exc:
        elapsed = time.perf_counter() - started
        line = f"FAIL  criterion {number:2d}: {title} ({elapsed:.1f} s) :: {exc}"
        RESULTS[(number, title)] = line
        print(line)
        raise
    note = detail.get("note")
    line = f"PASS  criterion {number:2d}: {title} ({elapsed:.1f} s)"
    RESULTS[(number, title)] = line + (f" :: {note}" if note else "")
    print(RESULTS[(number, title)])


def test_criterion_01_decoder_optimality():
    with criterion(1, "decoder matches exhaustive search on 200 matrices", limit=10) as d:
        rng = np.random.default_rng(1)
        unique = 0
        for k in range(200):
            w = 2 + k % 4
            scores = rng.normal(size=(w, w + 1))
            if k % 5 == 0:
                scores = np.round(scores)  # ties
            heads = decode(scores)
            best, trees = brute_force_best(scores)
            assert abs(tree_score(scores, heads) - best) < 1e-9
            if len(trees) == 1:
                unique += 1
                assert heads == trees[0]
        d["note"] = f"{unique} unique optima matched exactly"


@pytest.mark.parametrize("loss_mode", ["xent", "mse"])
def test_criterion_02_gradient_correctness(loss_mode):
    with criterion(2, f"finite-difference gradient check ({loss_mode})", limit=60) as d:
        worst = 0.0
        for seed in range(3):
            r = np.random.default_rng(500 + seed)
            model = init_model(2, 3, 1, seed=seed)
            flat = {k: v + r.normal(0, 0.3, v.shape) for k, v in model.flatten().items()}
            feats = r.normal(size=(3, 2))
            target = r.normal(size=(3, 4))

            def loss(p):
                scores = score_sentence(feats, ModelParams.from_flat(p))
                if loss_mode == "xent":
                    return cross_entropy_loss(scores, [2, 0, 2])
                return mse_loss(scores, target)

            analytic = compute_gradients(loss, flat).gradients
            numeric = numeric_gradients(lambda p: np.asarray(loss(p)), flat, delta=1e-5)
            worst = max(worst, max_relative_error(analytic, numeric))
        d["note"] = f"max relative error {worst:.2e}"
        assert worst < 1e-4


def test_criterion_03_projection_oracle():
    with criterion(3, "projection equals nested-loop transcription on 50 setups") as d:
        rng = np.random.default_rng(3)
        worst, zero = 0.0, 0
        for _ in range(50):
            pipeline_args, oracle_args = random_projection_setup(rng)
            expected = nested_loop_projection(*oracle_args)
            for inst in project(*pipeline_args):
                ref = np.array(expected[inst.id])
                worst = max(worst, float(np.abs(inst.scores - ref).max()))
                zero += not np.any(ref)
        d["note"] = f"max abs diff {worst:.1e}, {zero} all-zero targets"
        assert worst < 1e-12
        assert zero > 0


def test_criterion_04_standardization():
    with criterion(4, "pooled mean 0 and std 1 after standardize") as d:
        rng = np.random.default_rng(4)
        worst_mu = worst_sigma = 0.0
        for lang in range(20):
            sents = []
            for k in range(int(rng.integers(1, 8))):
                w = int(rng.integers(1, 9))
                scores = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 20), (w, w + 1))
                sents.append(io.ScoredSentence(f"{lang}-{k}", ["x"] * w, ["X"] * w, scores))
            if sum(len(s.tokens) ** 2 for s in sents) < 2:
                continue
            out = standardize(SourceCorpus(str(lang), sents))
            pooled = np.concatenate([s.scores[~self_arc_mask(len(s.tokens))]
                                     for s in out.sentences])
            worst_mu = max(worst_mu, abs(pooled.mean()))
            worst_sigma = max(worst_sigma, abs(pooled.std() - 1.0))
        d["note"] = f"|mean| <= {worst_mu:.1e}, |std-1| <= {worst_sigma:.1e}"
        assert worst_mu < 1e-9 and worst_sigma < 1e-9


def test_criterion_05_example_parse_matrix():
    with criterion(5, "heads [2,0,4,2] <-> example parse matrix"):
        printed = np.array([[0, 0, 1, 0, 0],
                            [1, 0, 0, 0, 0],
                            [0, 0, 0, 0, 1],
                            [0, 0, 1, 0, 0]])
        assert np.array_equal(heads_to_matrix([2, 0, 4, 2]), printed)
        assert matrix_to_heads(printed) == [2, 0, 4, 2]


def test_criterion_06_overfit_capacity():
    with criterion(6, "10 sentences reach 100% training UAS", limit=300) as d:
        treebank = generate_treebank(10, seed=3, max_len=8)
        emb = generate_embeddings(8, seed=4)
        fc = io.FeatureConfig.from_sentences(treebank, emb.width)
        data = [Example(io.featurize(s, emb, fc.pos_vocab), heads=s.heads) for s in treebank]
        # dropout is off: a capacity test asks whether the network can fit the data
        cfg = TrainConfig(loss_mode="xent", hidden=10, layers=1, epochs=200, seed=0,
                          dropout_hidden=0.0, dropout_input=0.0, stop_on_perfect_train=True)
        result = train(data, cfg=cfg)
        uas = evaluate_uas(result.params, data)
        d["note"] = f"UAS {100 * uas:.2f} after {result.best_epoch} epochs"
        assert uas == 1.0 and result.best_epoch <= 200


def test_criterion_07_shapes_and_involutions():
    with criterion(7, "tensor-LSTM shape law, involutions, softmax rows"):
        rng = np.random.default_rng(7)
        h, c = 3, 5
        layer = init_model(2, h, 1, seed=0).layers[0]
        # layer-0 cells take input width 2f+1 = 5
        for a in range(1, 5):
            for b in range(1, 5):
                t = rng.normal(size=(a, b, c))
                assert np.asarray(tensor_lstm_4d(t, layer)).shape == (a, b, 4 * h)
                m = rng.normal(size=(a, b))
                assert np.array_equal(row_reverse(row_reverse(m)), m)
                swapped = tensor_transpose(t, (1, 0, 2))
                assert swapped.shape == (b, a, c)
                assert np.array_equal(tensor_transpose(swapped, (1, 0, 2)), t)
        for w in range(1, 8):
            p = softmax_rows(rng.normal(0, 10, (w, w + 1)))
            assert np.all(np.abs(p.sum(axis=1) - 1.0) < 1e-9)


def test_criterion_08_optimizer_fixtures():
    with criterion(8, "RMSprop step, clipping and noise variance") as d:
        params = {"x": np.zeros(1)}
        step = rmsprop_step(params, {"x": np.ones(1)}, OptimizerState.fresh(params))["x"][0]
        assert abs(step - (-0.316228)) <= 1e-6
        clipped = clip_gradients({"a": np.array([18.0, 24.0])}, 15.0)
        assert abs(global_norm(clipped) - 15.0) <= 1e-9
        noise = add_gradient_noise({"a": np.zeros(100_000)}, t=3, seed=8)["a"]
        rel = abs(noise.var() / 0.466516 - 1.0)
        d["note"] = f"step {step:.6f}, variance off by {100 * rel:.2f}%"
        assert rel < 0.05


@pytest.mark.slow
def test_criterion_09_blankout_harness(tmp_path):
    with criterion(9, "blankout curve table is deterministic", limit=1800) as d:
        data = str(tmp_path / "data")
        assert main(["synth", "--out-dir", data, "--train-size", "200", "--test-size", "50",
                     "--seed", "9"]) == 0
        projected = str(tmp_path / "projected.jsonl")
        assert main(["project", "--target", os.path.join(data, "target.conllu"),
                     "--sources", os.path.join(data, "src1.jsonl"), os.path.join(data, "src2.jsonl"),
                     "--sent-align", os.path.join(data, "src1.sent"), os.path.join(data, "src2.sent"),
                     "--word-align", os.path.join(data, "src1.word"), os.path.join(data, "src2.word"),
                     "--out", projected]) == 0
        tables = []
        for run in range(2):
            out = str(tmp_path / f"curve{run}.tsv")
            assert main(["blankout-experiment", "--train", projected,
                         "--test", os.path.join(data, "test.conllu"),
                         "--embeddings", os.path.join(data, "embeddings.txt"),
                         "--fractions", "0,0.2,0.4", "--loss", "both", "--seed", "9",
                         "--hidden", "10", "--layers", "1", "--out", out]) == 0
            with open(out, "rb") as fh:
                tables.append(fh.read())
        assert tables[0] == tables[1]
        rows = tables[0].decode().splitlines()[1:]
        assert len(rows) == 6
        uas = {(r.split("\t")[0], r.split("\t")[1]): float(r.split("\t")[3]) for r in rows}
        drop = {m: uas[("0.0000", m)] - uas[("0.4000", m)] for m in ("mse", "xent")}
        d["note"] = (f"UAS drop 0 -> 0.4: mse {drop['mse']:.2f}, xent {drop['xent']:.2f} "
                     f"(reported only)")


def test_criterion_10_round_trips(tmp_path):
    with criterion(10, "model file, score corpus and CoNLL-U round trips"):
        params = init_model(6, 4, 2, seed=10)
        rng = np.random.default_rng(10)
        flat = {k: v + rng.normal(size=v.shape) for k, v in params.flatten().items()}
        model = ParserModel(ModelParams.from_flat(flat), io.FeatureConfig(4, ["A", "B"]))
        save_model(model, str(tmp_path / "m.json"))
        back = load_model(str(tmp_path / "m.json"))
        loaded = back.params.flatten()
        assert back.features == model.features
        assert all(np.array_equal(flat[k], loaded[k]) for k in flat)

        insts = []
        for k, w in enumerate((1, 3, 6)):
            scores = rng.normal(size=(w, w + 1)) / 3.0
            scores[self_arc_mask(w)] = 0.0
            insts.append(io.ScoredSentence(f"s{k}", ["tok"] * w, ["X"] * w, scores))
        io.write_score_corpus(insts, str(tmp_path / "s.jsonl"))
        for a, b in zip(insts, io.read_score_corpus(str(tmp_path / "s.jsonl"))):
            assert a.id == b.id and np.array_equal(a.scores, b.scores)

        treebank = generate_treebank(30, seed=10)
        io.write_treebank(treebank, None, str(tmp_path / "t.conllu"))
        assert io.read_treebank(str(tmp_path / "t.conllu")) == treebank


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    tests = [(name, fn) for name, fn in sorted(globals().items()) if name.startswith("test_")]
    for name, fn in tests:
        runs = [("xent",), ("mse",)] if name.endswith("gradient_correctness") else [()]
        for args in runs:
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as tmp:
                        fn(Path(tmp))
                else:
                    fn(*args)
            except Exception:
                failed += 1
    sys.exit(1 if failed else 0)
