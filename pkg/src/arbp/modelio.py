"""Model persistence: versioned JSON container (schema v1).

Floats are serialized via repr and therefore round-trip bit-identically, so
a saved/loaded model reproduces evaluation output exactly. Arrays are stored
flat with an explicit shape header.
"""

from __future__ import annotations

import json

import numpy as np

from . import bandwidth as bw
from .data import StandardizationRecord
from .engine import FittedDensityModel, PermutationPair
from .supervised import SupervisedModel

SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    """Unreadable or incompatible model file."""


def _encode_array(a) -> dict:
    a = np.asarray(a)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _decode_array(obj, dtype=float) -> np.ndarray:
    return np.asarray(obj["data"], dtype=dtype).reshape(obj["shape"])


def _encode_bandwidth(model: bw.BandwidthModel) -> dict:
    if isinstance(model, bw.Constant):
        return {"variant": "constant", "rho0": float(model.rho0)}
    if isinstance(model, bw.PerDim):
        return {"variant": "perdim", "rho0": _encode_array(model.rho0)}
    if isinstance(model, (bw.Rbf, bw.RationalQuadratic)):
        rho0 = np.asarray(model.rho0)
        out = {
            "variant": "rbf" if isinstance(model, bw.Rbf) else "rq",
            "rho0": float(rho0) if rho0.ndim == 0 else _encode_array(rho0),
            "ell": _encode_array(model.ell),
        }
        if isinstance(model, bw.RationalQuadratic):
            out["gamma"] = float(model.gamma)
        return out
    if isinstance(model, bw.Net):
        w = model.weights
        return {
            "variant": "net",
            "rho0": float(model.rho0),
            "W": _encode_array(w.W),
            "b": _encode_array(w.b),
            "V": _encode_array(w.V),
        }
    raise TypeError(f"unknown bandwidth model {type(model)!r}")


def _decode_bandwidth(obj) -> bw.BandwidthModel:
    variant = obj["variant"]
    if variant == "constant":
        return bw.Constant(rho0=obj["rho0"])
    if variant == "perdim":
        return bw.PerDim(rho0=_decode_array(obj["rho0"]))
    if variant in ("rbf", "rq"):
        rho0 = obj["rho0"]
        if isinstance(rho0, dict):
            rho0 = _decode_array(rho0)
        ell = _decode_array(obj["ell"])
        if variant == "rbf":
            return bw.Rbf(rho0=rho0, ell=ell)
        return bw.RationalQuadratic(rho0=rho0, ell=ell, gamma=obj["gamma"])
    if variant == "net":
        weights = bw.ArNetWeights(
            W=_decode_array(obj["W"]), b=_decode_array(obj["b"]), V=_decode_array(obj["V"])
        )
        return bw.Net(rho0=obj["rho0"], weights=weights)
    raise ModelFormatError(f"unknown bandwidth variant {variant!r}")


def _encode_record(record: StandardizationRecord | None):
    if record is None:
        return None
    return {
        "columns": list(record.columns),
        "mean": _encode_array(record.mean),
        "sd": _encode_array(record.sd),
        "dropped": [list(pair) for pair in record.dropped],
    }


def _decode_record(obj):
    if obj is None:
        return None
    return StandardizationRecord(
        columns=list(obj["columns"]),
        mean=_decode_array(obj["mean"]),
        sd=_decode_array(obj["sd"]),
        dropped=[tuple(pair) for pair in obj["dropped"]],
    )


def _encode_permutations(perms):
    return [
        {"samples": p.sample_order.tolist(), "features": p.feature_order.tolist()}
        for p in perms
    ]


def _decode_permutations(objs):
    return [
        PermutationPair(
            sample_order=np.asarray(p["samples"], dtype=int),
            feature_order=np.asarray(p["features"], dtype=int),
        )
        for p in objs
    ]


def save_model(model, path) -> None:
    """Write a fitted density or supervised model as schema-v1 JSON."""
    if isinstance(model, FittedDensityModel):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "model_type": "density",
            "bandwidth": _encode_bandwidth(model.bandwidth),
            "train": _encode_array(model.train),
            "permutations": _encode_permutations(model.permutations),
            "v": _encode_array(model.v),
            "seed": model.seed,
            "record": _encode_record(model.record),
            "init_density": model.init_density,
        }
    elif isinstance(model, SupervisedModel):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "model_type": "supervised",
            "task": model.task,
            "bandwidth": _encode_bandwidth(model.bandwidth),
            "train_x": _encode_array(model.train_x),
            "train_y": _encode_array(model.train_y),
            "permutations": _encode_permutations(model.permutations),
            "v_y": _encode_array(model.v_y),
            "seed": model.seed,
            "x_record": _encode_record(model.x_record),
            "y_mean": model.y_mean,
            "y_sd": model.y_sd,
        }
    else:
        raise TypeError(f"cannot serialize {type(model)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path):
    """Load a schema-v1 model file; raises ModelFormatError on mismatch."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a valid model file: {exc}") from None
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: schema version {version!r} not supported (expected {SCHEMA_VERSION})"
        )
    kind = payload.get("model_type")
    if kind == "density":
        return FittedDensityModel(
            bandwidth=_decode_bandwidth(payload["bandwidth"]),
            train=_decode_array(payload["train"]),
            permutations=_decode_permutations(payload["permutations"]),
            v=_decode_array(payload["v"]),
            seed=payload["seed"],
            record=_decode_record(payload["record"]),
            init_density=payload["init_density"],
        )
    if kind == "supervised":
        return SupervisedModel(
            bandwidth=_decode_bandwidth(payload["bandwidth"]),
            train_x=_decode_array(payload["train_x"]),
            train_y=_decode_array(payload["train_y"]),
            permutations=_decode_permutations(payload["permutations"]),
            v_y=_decode_array(payload["v_y"]),
            task=payload["task"],
            seed=payload["seed"],
            x_record=_decode_record(payload["x_record"]),
            y_mean=payload["y_mean"],
            y_sd=payload["y_sd"],
        )
    raise ModelFormatError(f"{path}: unknown model type {kind!r}")


def bandwidth_variant(model) -> str:
    """Structural variant name of a model's bandwidth (for load guards)."""
    return _encode_bandwidth(model.bandwidth)["variant"]
