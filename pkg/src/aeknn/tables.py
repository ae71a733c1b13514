"""Access to the bundled reference result tables.

These CSVs hold previously reported per-dataset Accuracy, F-Score, AUC and
classification-time results for AEkNN configurations and the kNN/PCA/LDA
baselines on fourteen public datasets, at the three-decimal precision they
were reported with. They feed the `stats` command so rank tables and
significance tests can be recomputed without re-running the experiments.
"""

from __future__ import annotations

from importlib import resources

from .stats import ResultMatrix

__all__ = ["available_tables", "reference_path", "load_reference"]

def _root():
    return resources.files("aeknn").joinpath("reference")


def available_tables() -> list[str]:
    return sorted(p.name[:-4] for p in _root().iterdir() if p.name.endswith(".csv"))


def reference_path(name: str):
    """Filesystem path of a bundled table (name without the .csv suffix)."""
    path = _root().joinpath(f"{name}.csv")
    if not path.is_file():
        raise KeyError(f"no reference table named {name!r}; have {available_tables()}")
    return path


def load_reference(name: str) -> ResultMatrix:
    return ResultMatrix.from_csv(reference_path(name))
