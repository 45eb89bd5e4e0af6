"""JSON persistence for trained models.

Floats are written with Python's shortest round-trip representation, so a
saved model reloads bit-identically and reruns are byte-stable.
"""

import json

from .errors import InputError
from .hmm import CategoricalHmm
from .qhmm import KrausModel


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {path}: {exc}") from exc
    kind = payload.get("type")
    if kind == "hmm":
        return CategoricalHmm.from_dict(payload)
    if kind == "qhmm":
        return KrausModel.from_dict(payload)
    raise InputError(f"unknown model type {kind!r} in {path}")
