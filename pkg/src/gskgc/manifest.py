"""Run manifests: every pipeline output is traceable to its inputs and config.

A manifest lives next to the artifact it describes (<artifact>.manifest.json)
and records stage name, dataset, seed, config, timestamps and sha256 digests
of all input and output files.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from gskgc.ioutil import atomic_writer


def file_digest(path) -> dict:
    h = hashlib.sha256()
    path = Path(path)
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return {"path": str(path), "sha256": h.hexdigest(), "bytes": path.stat().st_size}


def write_manifest(artifact, stage: str, started: datetime,
                   inputs: dict[str, Path], outputs: dict[str, Path],
                   config: Optional[dict] = None, seed: Optional[int] = None,
                   dataset: Optional[str] = None) -> Path:
    artifact = Path(artifact)
    manifest = {
        "stage": stage,
        "dataset": dataset,
        "seed": seed,
        "config": config or {},
        "started_utc": started.astimezone(timezone.utc).isoformat(),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "inputs": {name: file_digest(p) for name, p in inputs.items()
                   if Path(p).is_file()},
        "outputs": {name: file_digest(p) for name, p in outputs.items()
                    if Path(p).is_file()},
    }
    path = artifact.with_name(artifact.name + ".manifest.json")
    with atomic_writer(path) as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
