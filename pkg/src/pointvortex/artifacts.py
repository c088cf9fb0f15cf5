"""Output files: JSON reports, CSV fields and tables, JSON-lines chains, run manifests.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a partial file.  Content is deterministic (sorted keys,
shortest round-trip float repr); wall-clock time appears only in the
manifest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from .sampler import Chain

MANIFEST_NAME = "manifest.json"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    return json.dumps(obj, default=_default, sort_keys=True, indent=indent, allow_nan=True)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def field_csv(a) -> str:
    """Row-major CSV of a 1-D or 2-D array at full precision."""
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(np.asarray(a, dtype=float)), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def read_field_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def table_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def chain_jsonl(chain: Chain) -> str:
    """Header record, then one configuration per line."""
    lines = [dumps(chain.header(), indent=None)]
    for p, e in zip(chain.positions, chain.energies):
        lines.append(dumps({"energy": float(e), "side": chain.domain.side, "lambda": chain.lam, "positions": p.tolist()}, indent=None))
    return "\n".join(lines) + "\n"


def read_chain_jsonl(path):
    """``(header, positions (S, N, 2), energies (S,))`` from a chain file."""
    with open(path) as f:
        header = json.loads(f.readline())
        recs = [json.loads(line) for line in f if line.strip()]
    pos = np.array([r["positions"] for r in recs], dtype=float)
    return header, pos, np.array([r["energy"] for r in recs], dtype=float)


def versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba", "scikit-learn"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seeds: list
    versions: dict = field(default_factory=versions)
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    error: str | None = None
    outputs: list = field(default_factory=list)  # {"path", "sha256", "bytes"}

    def to_dict(self) -> dict:
        return asdict(self)


class ArtifactWriter:
    """Writes outputs under ``out_dir`` and records each one in the manifest."""

    def __init__(self, out_dir, manifest: RunManifest):
        self.out_dir = Path(out_dir)
        self.manifest = manifest

    def _emit(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        data = text.encode()
        atomic_write_bytes(path, data)
        rel = str(Path(name))
        self.manifest.outputs = [o for o in self.manifest.outputs if o["path"] != rel]
        self.manifest.outputs.append({"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return path

    def json(self, name: str, obj) -> Path:
        return self._emit(name, dumps(obj) + "\n")

    def field(self, name: str, a) -> Path:
        return self._emit(name, field_csv(a))

    def table(self, name: str, rows: list[dict]) -> Path:
        return self._emit(name, table_csv(rows))

    def chain(self, name: str, chain: Chain) -> Path:
        return self._emit(name, chain_jsonl(chain))

    def finish(self, status: str = "ok", error: str | None = None) -> Path:
        m = self.manifest
        m.status, m.error, m.finished = status, error, _now()
        path = self.out_dir / MANIFEST_NAME
        atomic_write_bytes(path, (dumps(m.to_dict()) + "\n").encode())
        return path
