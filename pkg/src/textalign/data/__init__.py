"""Bundled toy corpus: two retellings of the same fable plus two
unrelated fables, used by the test suite and handy for CLI smoke runs."""

from importlib.resources import files
from pathlib import Path

RELATED_PAIR = ("lion_mouse_a.txt", "lion_mouse_b.txt")
UNRELATED = ("fox_and_grapes.txt", "crow_and_pitcher.txt")


def toy_corpus_dir() -> Path:
    return Path(str(files(__package__) / "fables"))


def toy_corpus_paths() -> dict[str, Path]:
    root = toy_corpus_dir()
    return {name: root / name for name in RELATED_PAIR + UNRELATED}
