"""Line-delimited trial record files.

Line 1 is a JSON header (config snapshot, per-robot accuracies and metrics).
Every following line is a JSON array

    [k, robot, n, t, local, alpha, social, beta, informed]

holding one robot's stored state after sample ``k`` (1-based). Floats are
written with ``repr`` so files round-trip exactly and are byte-reproducible.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .metrics import TrialRecord

FORMAT = "swarm-perception.trial"
VERSION = 1
COLUMNS = ("k", "robot", "n", "t", "local", "alpha", "social", "beta", "informed")


class RecordError(RuntimeError):
    """A record file is missing, unreadable or inconsistent."""


class IntegrityError(RecordError):
    """A record file's content hash does not match the manifest."""


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def encode_record(record: TrialRecord) -> bytes:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "columns": list(COLUMNS),
        "config": record.config,
        "b": record.b.tolist(),
        "w": record.w.tolist(),
        "metrics": {
            "convergence": (record.convergence + 1).tolist(),
            "error": record.error.tolist(),
            "bin": record.bin.tolist(),
        },
    }
    lines = [json.dumps(header, sort_keys=True)]
    S, N = record.informed.shape
    cols = [record.n.tolist(), record.t.tolist(), record.local.tolist(), record.alpha.tolist(),
            record.social.tolist(), record.beta.tolist(), record.informed.tolist()]
    for s in range(S):
        rows = [c[s] for c in cols]
        for i in range(N):
            lines.append(f"[{s + 1},{i},{rows[0][i]},{rows[1][i]},{rows[2][i]!r},{rows[3][i]!r},"
                         f"{rows[4][i]!r},{rows[5][i]!r},{rows[6][i]!r}]")
    return ("\n".join(lines) + "\n").encode()


def write_record(record: TrialRecord, path) -> str:
    """Write ``record`` to ``path``; returns the sha256 of the bytes written."""
    data = encode_record(record)
    Path(path).write_bytes(data)
    return sha256_bytes(data)


def read_record(path) -> TrialRecord:
    path = Path(path)
    try:
        text = path.read_text()
        head, _, body = text.partition("\n")
        header = json.loads(head)
        if header.get("format") != FORMAT:
            raise ValueError("not a trial record")
        rows = np.array(json.loads("[" + body.strip().replace("\n", ",") + "]"), dtype=float)
        N = len(header["b"])
        S = rows.shape[0] // N
        if rows.shape != (S * N, len(COLUMNS)):
            raise ValueError("row table has the wrong shape")
        cols = rows.reshape(S, N, len(COLUMNS))
        record = TrialRecord(
            header["config"], np.array(header["b"]), np.array(header["w"]),
            cols[:, :, 2].astype(np.int64), cols[:, :, 3].astype(np.int64),
            *(np.ascontiguousarray(cols[:, :, c]) for c in range(4, 9)),
        )
    except FileNotFoundError:
        raise RecordError(f"missing record file: {path.name}") from None
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise RecordError(f"corrupt record file {path.name}: {exc}") from exc
    if (record.convergence + 1).tolist() != header["metrics"]["convergence"]:
        raise RecordError(f"corrupt record file {path.name}: stored metrics disagree with series")
    return record
