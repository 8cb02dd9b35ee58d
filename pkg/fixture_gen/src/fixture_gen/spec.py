"""Self-describing fixture specs, stored beside each fixture."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

FRAMEWORKS = ("lightgbm", "xgboost")
MAX_TREES = 100   # keep the repository small
MAX_ROWS = 500


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    framework: str
    n: int
    p: int
    n_trees: int
    depth: int
    seed: int
    learning_rate: float = 0.1
    base_score: float | None = None  # xgboost only

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"framework must be one of {FRAMEWORKS}")
        if self.n_trees > MAX_TREES or self.n > MAX_ROWS:
            raise ValueError(
                f"fixtures are capped at T <= {MAX_TREES}, n <= {MAX_ROWS}")


def save_spec(spec: FixtureSpec, generator: str, out_dir: Path) -> None:
    doc = dict(asdict(spec), generator=generator)
    with open(out_dir / "spec.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path) -> tuple[FixtureSpec, str]:
    with open(path) as fh:
        doc = json.load(fh)
    generator = doc.pop("generator")
    return FixtureSpec(**doc), generator
