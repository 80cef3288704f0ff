"""Loss files, manifests, atomic writes and report provenance.

Byte-level layouts are documented in docs/formats.md.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import DomainError, EmptySampleError, ParseError
from .loss_model import losses_from_predictions

OUTPUT_DIR_ENV = "EPSSTAR_OUTPUT_DIR"
LOSS_FORMATS = ("auto", "losses", "predictions")
_PROB_COL = re.compile(r"^p_(\d+)$")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


def atomic_write(path, data: str | bytes) -> Path:
    """Write the whole file via a sibling temp file and rename."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _float(cell: str, where: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"{where}: not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"{where}: non-finite value {cell!r}")
    return v


def _read_rows(path):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptySampleError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptySampleError(f"{path}: header but no data rows")
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ParseError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    return path, header, body


def _detect(header) -> str:
    if header == ["loss"]:
        return "losses"
    if header == ["prediction", "label"]:
        return "predictions"
    if len(header) >= 3 and header[-1] == "label":
        idx = [_PROB_COL.match(h) for h in header[:-1]]
        if all(idx) and [int(m.group(1)) for m in idx] == list(range(len(idx))):
            return "predictions"
    raise ParseError(f"unrecognised header {','.join(header)!r}; expected 'loss', "
                     "'prediction,label' or 'p_0,...,p_{C-1},label'")


def read_losses(path, kind: str = "auto", clip: bool = True) -> np.ndarray:
    """Parse a loss file into per-record losses.

    ``kind`` forces the expected layout; ``auto`` goes by the header.
    Prediction files are converted through the loss formulas.
    """
    if kind not in LOSS_FORMATS:
        raise DomainError(f"kind must be one of {LOSS_FORMATS}")
    path, header, body = _read_rows(path)
    found = _detect(header)
    if kind != "auto" and kind != found:
        raise ParseError(f"{path}: expected a {kind} file but header is {','.join(header)!r}")
    vals = np.array([[_float(c, f"{path}:{i}") for c in r] for i, r in enumerate(body, start=2)])
    if found == "losses":
        return vals[:, 0]
    labels = vals[:, -1]
    if np.any(labels != np.round(labels)):
        raise ParseError(f"{path}: labels must be integers")
    preds = vals[:, 0] if len(header) == 2 else vals[:, :-1]
    try:
        return losses_from_predictions(preds, labels.astype(np.int64), clip=clip)
    except DomainError as exc:
        raise DomainError(f"{path}: {exc}") from exc


def format_losses(values) -> str:
    v = np.asarray(values, dtype=np.float64).ravel()
    return "loss\n" + "".join(f"{x:.17g}\n" for x in v)


def write_losses(path, values) -> Path:
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise DomainError("refusing to write non-finite losses")
    return atomic_write(path, format_losses(v))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclasses.dataclass(frozen=True)
class ManifestEntry:
    model_id: str
    train: Path
    pop: Path
    utility: float | None = None
    tags: dict = dataclasses.field(default_factory=dict)

    @property
    def strategy(self) -> str:
        return str(self.tags.get("strategy", self.model_id))


@dataclasses.dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    path: Path | None = None

    def __post_init__(self):
        if not self.entries:
            raise EmptySampleError("manifest has no entries")
        ids = [e.model_id for e in self.entries]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ParseError(f"duplicate model_id(s) in manifest: {', '.join(dupes)}")


def _entry(raw: dict, base: Path, where: str) -> ManifestEntry:
    try:
        mid, tr, po = str(raw["model_id"]), raw["train"], raw["pop"]
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from None
    util = raw.get("utility")
    if util in ("", None):
        util = None
    else:
        util = _float(str(util), where)
    tags = raw.get("tags") or {}
    if isinstance(tags, str):
        try:
            tags = json.loads(tags)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{where}: tags are not JSON: {exc}") from None
    if not isinstance(tags, dict):
        raise ParseError(f"{where}: tags must be an object")
    tr_p, po_p = base / str(tr), base / str(po)
    for p in (tr_p, po_p):
        if not p.is_file():
            raise FileNotFoundError(f"{where}: loss file not found: {p}")
    return ManifestEntry(mid, tr_p, po_p, util, tags)


def read_manifest(path) -> Manifest:
    """Read a JSON or CSV manifest; relative loss paths resolve against its folder."""
    path = Path(path)
    base = path.parent
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
        raws = doc.get("entries") if isinstance(doc, dict) else doc
        if not isinstance(raws, list):
            raise ParseError(f"{path}: expected a list of entries")
        entries = [_entry(r, base, f"{path}[{i}]") for i, r in enumerate(raws)]
    else:
        rows = list(csv.DictReader(text.splitlines()))
        entries = [_entry(r, base, f"{path}:{i}") for i, r in enumerate(rows, start=2)]
    return Manifest(tuple(entries), path)


def provenance(command: str, config: dict, seeds=None, diagnostics=None, inputs=None) -> dict:
    """Replay block attached to every report.

    Only deterministic content goes in (no timestamps or host names) so two
    runs of the same command produce identical bytes.
    """
    from . import __version__

    out = {"tool": "epsstar", "version": __version__, "command": command, "config": config,
           "seeds": seeds if seeds is not None else {}}
    if inputs:
        out["inputs"] = {k: {"name": Path(p).name, "sha256": file_digest(p)} for k, p in inputs.items()}
    if diagnostics is not None:
        out["diagnostics"] = diagnostics
    return out


def _clean(obj):
    # JSON has no inf/nan; spell them as strings.
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return [_clean(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(x) for x in obj]
    return obj


def dumps_report(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, doc: dict) -> Path:
    return atomic_write(path, dumps_report(doc))
