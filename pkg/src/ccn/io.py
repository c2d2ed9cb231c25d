"""File formats: CSV matrices, JSON model files, and run manifests.

CSV is the data interchange format: header row, comma separators, reals
written with 17 significant digits (lossless for 64-bit floats), labels
written as 0/1.  Models, feature transforms, and reports are JSON; json's
repr-based float encoding round-trips bit-exactly.  Every command writes a
manifest last, so its presence marks a completed run.
"""

import csv
import json
import time

import numpy as np

from ._version import __version__
from .errors import ValidationError
from .estimators import FittedModel
from .model import LossSpec, ModelParams

__all__ = [
    "format_real",
    "write_matrix_csv",
    "read_matrix_csv",
    "read_label_csv",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "write_json",
    "read_json",
    "write_manifest",
]

MODEL_SCHEMA_VERSION = 1


def format_real(x):
    return format(float(x), ".17g")


def write_matrix_csv(path, header, matrix, integer=False):
    """Write a matrix as CSV; an empty matrix produces a header-only file."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in matrix:
            if integer:
                writer.writerow(str(int(v)) for v in row)
            else:
                writer.writerow(format_real(v) for v in row)


def read_matrix_csv(path):
    """Read a numeric CSV with a header row; parse errors carry line numbers."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, expected a header row")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: line {lineno}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as err:
                raise ValidationError(f"{path}: line {lineno}: {err}") from None
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return header, data


def read_label_csv(path):
    """Read a binary label CSV, validating every cell is 0 or 1."""
    header, data = read_matrix_csv(path)
    if data.size and not np.isin(data, (0.0, 1.0)).all():
        bad = np.argwhere(~np.isin(data, (0.0, 1.0)))[0]
        raise ValidationError(
            f"{path}: line {bad[0] + 2}: label column {header[bad[1]]} "
            f"has non-binary value {data[tuple(bad)]!r}"
        )
    return header, data


def model_to_dict(fm):
    params = fm.params
    L, m = params.n_labels, params.n_features
    rows, cols = np.tril_indices(L, -1)
    spec = fm.loss_spec
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "method": fm.method,
        "propagation": fm.propagation,
        "activation": fm.activation,
        "loss_spec": {
            "kind": spec.kind,
            "xi_plus": spec.xi_plus,
            "xi_minus": spec.xi_minus,
            "kappa": spec.kappa,
            "q": spec.q,
            "lambda": spec.lam,
        },
        # 1-based original label indices, in chain order
        "label_order": [int(i) + 1 for i in fm.label_order],
        "b": params.b.tolist(),
        "W": {"rows": L, "cols": m, "data": params.W.ravel().tolist()},
        # (k, l, value) with 1-based chain positions, k > l
        "C": [[int(k) + 1, int(l) + 1, float(params.C[k, l])]
              for k, l in zip(rows, cols)],
        "training_loss": fm.training_loss,
        "n_starts_used": fm.n_starts_used,
        "flags": list(fm.flags),
    }


def model_from_dict(doc):
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported model schema version {doc.get('schema_version')!r}"
        )
    b = np.asarray(doc["b"], dtype=float)
    L = b.shape[0]
    W = np.asarray(doc["W"]["data"], dtype=float).reshape(
        int(doc["W"]["rows"]), int(doc["W"]["cols"])
    )
    C = np.zeros((L, L))
    for k, l, value in doc["C"]:
        C[int(k) - 1, int(l) - 1] = float(value)
    spec_doc = doc["loss_spec"]
    spec = LossSpec(
        kind=spec_doc["kind"],
        xi_plus=spec_doc["xi_plus"],
        xi_minus=spec_doc["xi_minus"],
        kappa=spec_doc["kappa"],
        q=spec_doc["q"],
        lam=spec_doc["lambda"],
    )
    return FittedModel(
        params=ModelParams(b=b, W=W, C=C),
        label_order=np.asarray([int(i) - 1 for i in doc["label_order"]],
                               dtype=np.int64),
        activation=doc["activation"],
        loss_spec=spec,
        training_loss=doc["training_loss"],
        n_starts_used=doc["n_starts_used"],
        method=doc["method"],
        propagation=doc["propagation"],
        flags=tuple(doc.get("flags", ())),
    )


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_model(path, fm):
    write_json(path, model_to_dict(fm))


def load_model(path):
    return model_from_dict(read_json(path))


def write_manifest(path, command, config, seed, artifacts, started_at):
    """Record a completed run; written after every listed artifact exists."""
    write_json(path, {
        "command": command,
        "config": config,
        "seed": seed,
        "artifacts": list(artifacts),
        "wall_clock_seconds": time.time() - started_at,
        "version": __version__,
    })
