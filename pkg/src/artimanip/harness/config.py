"""Run configuration: one INI file plus ``section.key=value`` overrides.

Schema (every key optional)::

    [run]
    categories = all                 # or a comma/space separated list
    seeds = 100                      # episodes per category
    seed_offset = 0                  # first object seed
    budget = 200                     # skill calls per episode
    affordance = gt                  # gt | model
    threshold = 0.5                  # affordance score threshold for F1
    program_seed = 0                 # rand() stream of the interpreter
    workers = 1

    [providers]
    describe = offline               # offline | perturbed | remote
    ground = offline
    segment = offline
    codegen = offline                # offline | remote
    endpoint =
    timeout = 10
    retries = 2
    dilation = 0.0                   # box growth per side, fraction of box size
    erosion = 1                      # mask erosion of the perturbed segmenter, px

    [skills]                         # any SkillConfig field, e.g. K = 200

    [paths]
    model =                          # required when affordance = model
    dataset = dataset.txt
    output = out

    [acceptance]                     # checked by `run`; violations -> exit code 1
    min_success_rate =
    min_iou =
    min_f1 =
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..grounding.types import ProviderConfig
from ..scene.objects import CATEGORIES, canonical_category
from ..skills.control import SkillConfig

AFFORDANCE_MODES = ("gt", "model")
KNOWN_KEYS = {
    "run": ("categories", "seeds", "seed_offset", "budget", "affordance", "threshold", "program_seed", "workers"),
    "providers": ("describe", "ground", "segment", "codegen", "endpoint", "timeout", "retries", "dilation", "erosion"),
    "skills": None,  # validated by SkillConfig
    "paths": ("model", "dataset", "output"),
    "acceptance": ("min_success_rate", "min_iou", "min_f1"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    categories: tuple[str, ...] = CATEGORIES
    seeds: int = 100
    seed_offset: int = 0
    budget: int = 200
    affordance: str = "gt"
    threshold: float = 0.5
    program_seed: int = 0
    workers: int = 1
    providers: ProviderConfig = field(default_factory=ProviderConfig)
    codegen: str = "offline"
    skills: SkillConfig = field(default_factory=SkillConfig)
    model_path: str | None = None
    dataset_path: str = "dataset.txt"
    output_dir: str = "out"
    acceptance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if self.budget < 1 or self.workers < 1:
            raise ConfigError("budget and workers must be positive")
        if self.affordance not in AFFORDANCE_MODES:
            raise ConfigError(f"affordance must be one of {AFFORDANCE_MODES}")
        if self.codegen not in ("offline", "remote"):
            raise ConfigError("codegen must be offline or remote")
        if self.codegen == "remote" and not self.providers.endpoint:
            raise ConfigError("remote codegen needs providers.endpoint")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.affordance == "model":
            if not self.model_path:
                raise ConfigError("affordance = model needs paths.model")
            if not Path(self.model_path).is_file():
                raise ConfigError(f"model file not found: {self.model_path}")

    def semantic(self) -> dict:
        """Fields that change results; excludes worker count and output location."""
        d = {
            "categories": list(self.categories), "seeds": self.seeds, "seed_offset": self.seed_offset,
            "budget": self.budget, "affordance": self.affordance, "threshold": self.threshold,
            "program_seed": self.program_seed, "providers": asdict(self.providers), "codegen": self.codegen,
            "skills": asdict(self.skills), "acceptance": dict(sorted(self.acceptance.items())),
        }
        if self.affordance == "model":
            d["model_sha256"] = hashlib.sha256(Path(self.model_path).read_bytes()).hexdigest()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _split(text: str) -> list[str]:
    return [t for t in text.replace(",", " ").split() if t]


def parse_categories(text: str) -> tuple[str, ...]:
    items = _split(text)
    if not items or items == ["all"]:
        return CATEGORIES
    return tuple(canonical_category(c) for c in items)


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name.strip(), value.strip())


def load_config(path: str | Path | None = None, overrides=()) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # skill gains K and neighbour count k differ only by case
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        parser.read(path, encoding="utf-8")
    apply_overrides(parser, overrides)
    return config_from_parser(parser, base=Path(path).parent if path else Path("."))


def config_from_parser(parser: configparser.ConfigParser, base: Path = Path(".")) -> RunConfig:
    unknown = set(parser.sections()) - set(KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, keys in KNOWN_KEYS.items():
        if keys is not None and parser.has_section(section):
            extra = set(parser[section]) - set(keys)
            if extra:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")

    def get(section, key, default):
        return parser.get(section, key, fallback=default) if parser.has_section(section) else default

    def resolve(p):
        if not p:
            return None
        q = Path(p)
        return str(q if q.is_absolute() else base / q)

    try:
        prov_kw = {}
        for key in ("describe", "ground", "segment"):
            prov_kw[key] = get("providers", key, "offline")
        prov_kw["endpoint"] = get("providers", "endpoint", "") or None
        prov_kw["timeout"] = float(get("providers", "timeout", "10"))
        prov_kw["retries"] = int(get("providers", "retries", "2"))
        prov_kw["dilation"] = float(get("providers", "dilation", "0"))
        prov_kw["erosion"] = int(get("providers", "erosion", "1"))
        providers = ProviderConfig(**prov_kw)
        skills = SkillConfig.from_mapping(dict(parser["skills"])) if parser.has_section("skills") else SkillConfig()
        acceptance = {}
        if parser.has_section("acceptance"):
            for key, val in parser["acceptance"].items():
                if val.strip():
                    acceptance[key] = float(val)
        return RunConfig(
            categories=parse_categories(get("run", "categories", "all")),
            seeds=int(get("run", "seeds", "100")),
            seed_offset=int(get("run", "seed_offset", "0")),
            budget=int(get("run", "budget", "200")),
            affordance=get("run", "affordance", "gt").strip(),
            threshold=float(get("run", "threshold", "0.5")),
            program_seed=int(get("run", "program_seed", "0")),
            workers=int(get("run", "workers", "1")),
            providers=providers,
            codegen=get("providers", "codegen", "offline").strip(),
            skills=skills,
            model_path=resolve(get("paths", "model", "")),
            dataset_path=resolve(get("paths", "dataset", "dataset.txt")),
            output_dir=resolve(get("paths", "output", "out")),
            acceptance=acceptance,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
