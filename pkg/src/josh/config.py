from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class TrainConfig:
    dim: int = 100
    window: int = 5
    k: int = 5
    alpha0: float = 0.025
    margin: float = 0.25
    margin_intra: float = 0.9
    min_count: int = 5
    epochs_per_mstep: int = 2
    tree_passes_per_mstep: int = 50
    threads: int = 1
    seed: int = 42
    kappa_init: float = 10.0
    subsample: float = 0.0
    warmup_mstep: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.dim >= 2, "dim must be >= 2"),
            (self.window >= 1, "window must be >= 1"),
            (self.k >= 1, "k must be >= 1"),
            (self.alpha0 > 0, "alpha0 must be positive"),
            (0 < self.margin < 2, "margin must lie in (0, 2)"),
            (0 < self.margin_intra < 1, "margin_intra must lie in (0, 1)"),
            (self.min_count >= 1, "min_count must be >= 1"),
            (self.epochs_per_mstep >= 1, "epochs_per_mstep must be >= 1"),
            (self.tree_passes_per_mstep >= 0, "tree_passes_per_mstep must be >= 0"),
            (self.threads >= 1, "threads must be >= 1"),
            (self.kappa_init > 0, "kappa_init must be positive"),
            (0 <= self.subsample, "subsample must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)
