"""On-disk cache of NLI spectra keyed by configuration hash.

One JSON file per entry.  Files carry a format version and the key they were
stored under; anything unreadable or mismatched is treated as a miss.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .gn import SPECTRUM_FORMAT_VERSION, NliSpectrum

log = logging.getLogger(__name__)

CACHE_FORMAT_VERSION = 1
ENV_VAR = "AIRLINK_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "airlink"


@dataclass
class SpectrumCache:
    root: Path = field(default_factory=default_cache_dir)
    hits: int = 0
    misses: int = 0

    def __post_init__(self):
        self.root = Path(self.root)

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def load(self, key: str) -> NliSpectrum | None:
        path = self.path_for(key)
        if not path.exists():
            self.misses += 1
            return None
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            if doc.get("cache_version") != CACHE_FORMAT_VERSION:
                raise ValueError(f"cache version {doc.get('cache_version')!r}")
            if doc.get("key") != key:
                raise ValueError(f"stored key {doc.get('key')!r} does not match file name")
            spec = NliSpectrum.from_json(doc["spectrum"])
        except Exception as exc:  # corrupted or stale entry: recompute
            log.warning("ignoring cache entry %s (%s); recomputing", path, exc)
            self.misses += 1
            return None
        self.hits += 1
        return spec

    def store(self, key: str, spectrum: NliSpectrum, label: str = "") -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {
            "cache_version": CACHE_FORMAT_VERSION,
            "spectrum_version": SPECTRUM_FORMAT_VERSION,
            "key": key,
            "label": label,
            "spectrum": spectrum.to_json(),
        }
        path = self.path_for(key)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{key}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    def entries(self) -> list[dict]:
        if not self.root.is_dir():
            return []
        out = []
        for path in sorted(self.root.glob("*.json")):
            info = {"key": path.stem, "path": str(path), "bytes": path.stat().st_size}
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                info["label"] = doc.get("label", "")
                info["cache_version"] = doc.get("cache_version")
                info["valid"] = doc.get("cache_version") == CACHE_FORMAT_VERSION and doc.get("key") == path.stem
            except Exception:
                info["valid"] = False
            out.append(info)
        return out

    def clear(self, key: str | None = None) -> int:
        if not self.root.is_dir():
            return 0
        paths = [self.path_for(key)] if key else list(self.root.glob("*.json"))
        removed = 0
        for p in paths:
            if p.exists():
                p.unlink()
                removed += 1
        return removed
