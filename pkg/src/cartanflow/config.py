"""Numerical tolerances shared by all modules.

Absolute thresholds are derived from the relative values as
``rel * (1 + norm)`` where ``norm`` is the Frobenius norm of the matrix in
question.
"""
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    member: float = 1e-10
    group: float = 1e-8
    solve: float = 1e-8
    cluster: float = 1e-8
    face: float = 1e-6
    gap_min: float = 1e-10
    flow_gap: float = 1e-6
    commute: float = 1e-8

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        for key, value in overrides.items():
            if key not in known:
                raise KeyError(f"unknown tolerance {key!r}; expected one of {sorted(known)}")
            if not value > 0:
                raise ValueError(f"tolerance {key} must be positive, got {value}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT = Tolerances()
