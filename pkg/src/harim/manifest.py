"""Run manifests: a reproducibility record written next to every output.

A manifest captures everything that determined an output -- command name,
resolved configuration (defaults filled in), SHA-256 digests of the inputs,
and the tool version.  Deliberately no timestamps or host details: re-running
the same command on the same inputs must reproduce the manifest (and the
output) byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping

from . import __version__


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_manifest(
    command: str,
    config: Mapping[str, object],
    inputs: Mapping[str, tuple[str, str]],
) -> dict:
    """Assemble the manifest dict.

    ``inputs`` maps a role name (e.g. "dump", "pairs") to (path, sha256).
    """
    return {
        "command": command,
        "config": dict(config),
        "inputs": {
            role: {"path": path, "sha256": digest}
            for role, (path, digest) in inputs.items()
        },
        "version": __version__,
    }


def render_manifest(manifest: Mapping[str, object]) -> str:
    """Canonical textual form: sorted keys, stable separators."""
    return json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def manifest_path_for(out_path: str) -> str:
    return out_path + ".manifest.json"
