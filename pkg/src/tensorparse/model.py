"""A trained parser (weights plus feature configuration) and its file format."""
import json
from dataclasses import dataclass

import numpy as np

from .decoder import decode
from .encoder import ModelParams, score_sentence
from .errors import DataError, ShapeError
from .io import FeatureConfig, featurize

FORMAT = "tensorparse-model"
VERSION = 1


@dataclass
class ParserModel:
    params: ModelParams
    features: FeatureConfig

    def featurize(self, sentence, embeddings):
        if embeddings.width != self.features.embedding_width:
            raise DataError(f"embeddings have width {embeddings.width}; model expects "
                            f"{self.features.embedding_width}")
        return featurize(sentence, embeddings, self.features.pos_vocab, self.features.use_pos)

    def score(self, sentence, embeddings):
        return score_sentence(self.featurize(sentence, embeddings), self.params)

    def parse(self, sentence, embeddings):
        return decode(self.score(sentence, embeddings))


def model_to_dict(model):
    p = model.params
    return {
        "format": FORMAT,
        "version": VERSION,
        "dims": {"features": p.features, "hidden": p.hidden, "layers": p.num_layers},
        "feature_config": {
            "embedding_width": model.features.embedding_width,
            "pos_vocab": list(model.features.pos_vocab),
            "use_pos": model.features.use_pos,
        },
        "parameters": {name: {"shape": list(arr.shape), "values": arr.ravel().tolist()}
                       for name, arr in p.flatten().items()},
    }


def model_from_dict(doc):
    if doc.get("format") != FORMAT:
        raise DataError(f"not a model file (format {doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    try:
        flat = {}
        for name, entry in doc["parameters"].items():
            values = np.array(entry["values"], dtype=np.float64)
            flat[name] = values.reshape(entry["shape"])
        params = ModelParams.from_flat(flat)
        fc = doc["feature_config"]
        features = FeatureConfig(int(fc["embedding_width"]), list(fc["pos_vocab"]),
                                 bool(fc["use_pos"]))
        dims = doc["dims"]
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed model file: {exc}") from None
    try:
        params.validate()
    except ShapeError as exc:
        raise DataError(f"inconsistent model parameters: {exc}") from None
    if (params.features, params.hidden, params.num_layers) != \
            (dims["features"], dims["hidden"], dims["layers"]):
        raise DataError("model dims do not match parameter shapes")
    if features.width != params.features:
        raise DataError(f"feature configuration gives width {features.width}, "
                        f"parameters expect {params.features}")
    return ParserModel(params, features)


def save_model(model, path):
    """Write a versioned JSON model file; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from None
    return model_from_dict(doc)
