"""Bundled sample files so the whole pipeline can run offline.

Contents: a 60-row reward dataset over three models, the matching registry,
a keyword tag-rules file, a synthetic benchmark spec, and a small list of
benchmark queries for the decontamination demo.
"""

from importlib import resources
from pathlib import Path


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file."""
    path = Path(str(resources.files(__package__).joinpath(name)))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path
