"""Local, file-based model archive (one JSON document per model).

Floats are written by :mod:`json`, which uses ``repr`` -- the shortest
string that round-trips to the same 64-bit value -- so a save/load cycle is
bit-exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .agent import DQN_TENSORS
from .forecaster import LSTM_TENSORS, Scaler

FORMAT_VERSION = 1
SCHEMAS = {"lstm": frozenset(LSTM_TENSORS), "dqn": frozenset(DQN_TENSORS)}
SUFFIX = ".nbg.json"


class ArchiveError(Exception):
    pass


class SchemaMismatch(ArchiveError):
    pass


class ShapeMismatch(ArchiveError):
    pass


class UnsupportedVersion(ArchiveError):
    pass


class IoFailure(ArchiveError):
    pass


@dataclass
class ModelArchive:
    kind: str
    tensors: dict[str, np.ndarray]
    scaler: Optional[Scaler] = None
    metadata: dict[str, str] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_document(self) -> dict:
        doc = {
            "format_version": self.format_version,
            "kind": self.kind,
            "tensors": {name: {"shape": list(arr.shape),
                               "data": [float(v) for v in np.asarray(arr, dtype=np.float64).ravel()]}
                        for name, arr in sorted(self.tensors.items())},
            "scaler": None,
            "metadata": {str(k): str(v) for k, v in sorted(self.metadata.items())},
        }
        if self.scaler is not None:
            doc["scaler"] = {"mean": [float(v) for v in self.scaler.mean],
                             "std": [float(v) for v in self.scaler.std]}
        return doc


def validate(doc: dict) -> ModelArchive:
    """Check a parsed document and build the archive it describes."""
    if not isinstance(doc, dict):
        raise SchemaMismatch("archive must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {version!r} is not supported")
    kind = doc.get("kind")
    if kind not in SCHEMAS:
        raise SchemaMismatch(f"unknown model kind {kind!r}")
    tensors_doc = doc.get("tensors")
    if not isinstance(tensors_doc, dict):
        raise SchemaMismatch("missing tensors map")
    names = set(tensors_doc)
    if names != SCHEMAS[kind]:
        missing = sorted(SCHEMAS[kind] - names)
        unknown = sorted(names - SCHEMAS[kind])
        raise SchemaMismatch(f"{kind} tensors mismatch: missing {missing}, unknown {unknown}")
    tensors = {}
    for name, entry in tensors_doc.items():
        try:
            shape = [int(s) for s in entry["shape"]]
            data = entry["data"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"tensor {name!r} is malformed") from exc
        if any(s < 0 for s in shape) or int(np.prod(shape)) != len(data):
            raise ShapeMismatch(f"tensor {name!r}: shape {shape} does not hold {len(data)} values")
        tensors[name] = np.array(data, dtype=np.float64).reshape(shape)
    scaler = None
    if doc.get("scaler") is not None:
        try:
            scaler = Scaler(mean=np.array(doc["scaler"]["mean"], dtype=np.float64),
                            std=np.array(doc["scaler"]["std"], dtype=np.float64))
        except (KeyError, TypeError) as exc:
            raise SchemaMismatch("scaler is malformed") from exc
        if scaler.mean.shape != scaler.std.shape:
            raise ShapeMismatch("scaler mean/std lengths differ")
    metadata = doc.get("metadata") or {}
    return ModelArchive(kind=kind, tensors=tensors, scaler=scaler,
                        metadata={str(k): str(v) for k, v in metadata.items()},
                        format_version=version)


def save(archive: ModelArchive, path) -> None:
    doc = archive.to_document()
    validate(json.loads(json.dumps(doc)))
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(doc, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load(path) -> ModelArchive:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return validate(doc)
