"""Small shared helpers: stable hashing and canonical JSON."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize to a canonical JSON string (sorted keys, compact, UTF-8)."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def stable_hash(*parts: Any) -> int:
    """Deterministic 64-bit hash of the given parts, stable across processes.

    Unlike builtin ``hash``, this does not depend on PYTHONHASHSEED, so seeds
    derived from it reproduce across machines and runs.
    """
    payload = canonical_json([str(p) for p in parts]).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big")


def stable_digest(*parts: Any) -> str:
    """Short hex digest of the given parts, for deterministic ids."""
    payload = canonical_json([str(p) for p in parts]).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]
