"""Versioned single-file checkpoint of named float64 tensors.

Layout: a magic line, one JSON header line (dims, vocabulary, tensor names
and shapes in storage order), then the raw little-endian tensor bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from lmgeo.tagger.model import TaggerDims, TaggerParams

MAGIC = b"LMGEO-TAGGER\n"
VERSION = 1


def save_params(params: TaggerParams, path) -> None:
    names = sorted(params.tensors)
    header = {
        "version": VERSION,
        "dims": asdict(params.dims),
        "seed": params.seed,
        "vocab": params.vocab,
        "tensors": [{"name": n, "shape": list(params.tensors[n].shape)} for n in names],
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8") + b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(params.tensors[n], dtype="<f8").tobytes())


def load_params(path) -> TaggerParams:
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ValueError(f"{path}: not a tagger checkpoint")
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        tensors = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated tensor {spec['name']}")
            tensors[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after last tensor")
    return TaggerParams(TaggerDims(**header["dims"]), header["vocab"], tensors, header["seed"])
