"""Atomic file writes: write to a sibling temp file, then rename over the
target, so readers never observe a half-written report."""

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path


@contextmanager
def atomic_writer(path, encoding="utf-8"):
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".",
                                    prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="") as fh:
            yield fh
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def atomic_write_text(path, text, encoding="utf-8"):
    with atomic_writer(path, encoding=encoding) as fh:
        fh.write(text)
