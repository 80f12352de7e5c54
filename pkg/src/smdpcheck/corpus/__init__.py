"""Model corpus shipped with the package."""

from importlib import resources

from ..model import Scheduler, Smdp, parse_model, parse_scheduler

__all__ = ["names", "path", "load", "load_scheduler"]


def names():
    """All corpus file names (models and schedulers)."""
    root = resources.files(__name__)
    return sorted(p.name for p in root.iterdir() if p.name.endswith((".smdp", ".sched")))


def path(name: str):
    """Filesystem path of a corpus file (usable while the package is on disk)."""
    return resources.files(__name__) / name


def load(name: str) -> Smdp:
    return parse_model(path(name).read_text(encoding="utf-8"))


def load_scheduler(name: str) -> Scheduler:
    return parse_scheduler(path(name).read_text(encoding="utf-8"))
