"""Campaign configuration: one flat key/value surface shared by all stages.

Format of config files: `key = value` per line, `#` comments, lists
comma-separated. Every key can be overridden on the command line; the
command line wins. The exact snapshot is embedded verbatim in every
manifest and report for provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .connectivity import DEFAULT_RESET_PATTERNS

ALL_OPERATORS = (
    "IDX_OFFSET", "SHIFT_AMT", "PARTSEL_BOUND", "SLICE_MIRROR",
    "TERNARY_BRANCH", "RELOP_SWAP", "GUARD_FORCE", "CASE_SEMANTICS",
    "IF_REMOVE", "CASE_REMOVE",
    "STMT_CONST", "ASSIGN_CONST", "INST_PARAM", "DELAY_CONST",
    "PORT_SWAP", "CONCAT_SWAP", "ASSIGN_DUP",
)

DEFAULT_VALIDITY_PATTERNS = (
    r"(^|_)(valid|ready|en|enable|ack|grant|busy)($|_)",
)


@dataclass
class CampaignConfig:
    budget: int = 20
    overgen_factor: float = 1.5
    seed: int = 0
    vectors: int = 64              # random cycles per equivalence stimulus
    exhaustive_bits: int = 14
    reset_cycles: int = 4
    sim_cycles: int = 128          # cycles per validation/evaluation stimulus
    runs: int = 3
    delta: int = 1                 # constant-perturbation step
    workers: int = 1
    validation_stimuli: int = 3    # seeded random stimuli for golden validation
    multibug_size: int = 5
    min_loc: int = 200
    strict: bool = False
    lenient: bool = False
    retain_unknown: bool = False
    operators: tuple[str, ...] = ALL_OPERATORS
    validity_patterns: tuple[str, ...] = DEFAULT_VALIDITY_PATTERNS
    reset_patterns: tuple[str, ...] = DEFAULT_RESET_PATTERNS

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.overgen_factor < 1:
            raise ValueError("overgen_factor must be >= 1")
        for name in ("vectors", "reset_cycles", "sim_cycles", "runs", "workers",
                     "validation_stimuli", "multibug_size", "exhaustive_bits"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        unknown = set(self.operators) - set(ALL_OPERATORS)
        if unknown:
            raise ValueError(f"unknown operators: {sorted(unknown)}")

    def pool_target(self) -> int:
        return math.ceil(self.overgen_factor * self.budget)

    def snapshot(self) -> str:
        """Canonical text form, embedded in manifests and reports."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines)

    @classmethod
    def from_items(cls, items: dict[str, str]) -> "CampaignConfig":
        kwargs = {}
        type_map = {f.name: f for f in fields(cls)}
        for key, raw in items.items():
            if key not in type_map:
                raise ValueError(f"unknown config key '{key}'")
            default = getattr(cls(), key)
            if isinstance(default, bool):
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                kwargs[key] = int(raw)
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            elif isinstance(default, tuple):
                kwargs[key] = tuple(v.strip() for v in raw.split(",") if v.strip())
            else:
                kwargs[key] = raw.strip()
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "CampaignConfig":
        return cls.from_items(parse_config_text(Path(path).read_text(encoding="utf-8")))

    def with_overrides(self, **overrides) -> "CampaignConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in overrides.items():
            if value is None:
                continue
            values[key] = value
        return CampaignConfig(**values)


def parse_config_text(text: str) -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        items[key.strip()] = value.strip()
    return items
