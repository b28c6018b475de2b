"""Run manifests: every stage records its seeds, files, and checksums."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    stage: str
    config_hash: str
    seeds: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    wall_seconds: float = 0.0

    def add_input(self, path) -> None:
        self.inputs.append({"path": str(path), "sha256": sha256_file(path)})

    def add_output(self, path) -> None:
        self.outputs.append({
            "path": str(path),
            "sha256": sha256_file(path),
            "bytes": os.path.getsize(path),
        })

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "notes": self.notes,
            "wall_seconds": self.wall_seconds,
        }


def write_manifest(manifest: RunManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
