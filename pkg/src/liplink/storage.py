"""Content-addressed blob storage on the local filesystem.

References are "sha256:<hex digest>"; identical bytes always map to the
same reference. Writes go through a temp file + rename so readers never
observe partial blobs.
"""

from __future__ import annotations

import hashlib
import os
import tempfile

from .errors import NotFound


class BlobStore:
    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, ref: str) -> str:
        if not ref.startswith("sha256:") or len(ref) != 7 + 64:
            raise NotFound(f"malformed blob reference {ref!r}")
        digest = ref[7:]
        return os.path.join(self.root, digest[:2], digest[2:])

    def put(self, data: bytes) -> str:
        ref = "sha256:" + hashlib.sha256(data).hexdigest()
        path = self._path(ref)
        if os.path.exists(path):
            return ref
        os.makedirs(os.path.dirname(path), exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path))
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return ref

    def get(self, ref: str) -> bytes:
        path = self._path(ref)
        try:
            with open(path, "rb") as fh:
                return fh.read()
        except FileNotFoundError:
            raise NotFound(f"no blob {ref}") from None

    def exists(self, ref: str) -> bool:
        try:
            return os.path.exists(self._path(ref))
        except NotFound:
            return False
