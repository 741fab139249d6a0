"""JSON job documents for the command line."""
import json
import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

from dbt_common.dataclass_schema import StrEnum, ValidationError, dbtClassMixin

from nlperspective.exceptions import ConfigParse, NLPerspectiveError
from nlperspective.families import FAMILIES
from nlperspective.funcs import FuncHandle, GridSpec, Norm
from nlperspective.include import PRESETS_PATH
from nlperspective.perspective import OracleGrids


class Command(StrEnum):
    eval = "eval"
    surface = "surface"
    verify = "verify"
    classify = "classify"
    convergence = "convergence"


@dataclass
class FamilySpec(dbtClassMixin):
    family: str
    params: Dict[str, Any] = field(default_factory=dict)
    dim: int = 1
    name: Optional[str] = None

    def build(self, norm: Optional[Norm] = None) -> FuncHandle:
        cls = FAMILIES.get(self.family)
        if cls is None:
            raise ConfigParse(f"Unknown family {self.family!r}; known: {sorted(FAMILIES)}")
        params = dict(self.params)
        if norm is not None and "norm" in {f.name for f in fields(cls)}:
            params["norm"] = str(norm)
        try:
            family = cls.from_dict(params)
        except NLPerspectiveError:
            raise
        except Exception as exc:
            raise ConfigParse(f"Bad parameters for {self.family}: {exc}") from exc
        return FuncHandle(family, self.dim, name=self.name or self.family)


@dataclass
class PairSpec(dbtClassMixin):
    name: str
    phi: FamilySpec
    s: FamilySpec


@dataclass
class EvalPoint(dbtClassMixin):
    x: List[float]
    y: List[float]
    xstar: Optional[List[float]] = None
    ystar: Optional[List[float]] = None


@dataclass
class JobConfig(dbtClassMixin):
    command: Command
    pairs: List[PairSpec] = field(default_factory=list)
    name: str = "job"
    points: List[EvalPoint] = field(default_factory=list)
    surface: Optional[GridSpec] = None
    functions: List[FamilySpec] = field(default_factory=list)
    function_grid: Optional[GridSpec] = None
    grids: OracleGrids = field(default_factory=OracleGrids)
    window: Optional[GridSpec] = None
    margin: float = 0.2
    refinements: int = 1
    tolerance: float = 8e-2
    output_dir: str = "."
    norm: Optional[Norm] = None
    debug_branch: Optional[str] = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigParse(f"tolerance must be > 0, got {self.tolerance}")
        if self.margin < 0:
            raise ConfigParse(f"margin must be >= 0, got {self.margin}")

    def build_pair(self, pair: PairSpec):
        return pair.phi.build(self.norm), pair.s.build(self.norm)

    def overridden(self, **overrides: Any) -> "JobConfig":
        data = self.to_dict(omit_none=True)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return parse_job(data)


def parse_job(data: Dict[str, Any]) -> JobConfig:
    try:
        JobConfig.validate(data)
        return JobConfig.from_dict(data)
    except NLPerspectiveError:
        raise
    except ValidationError as exc:
        raise ConfigParse(f"Invalid job document: {exc.message}") from exc
    except Exception as exc:
        raise ConfigParse(f"Invalid job document: {exc}") from exc


def load_job(path: str) -> JobConfig:
    try:
        with open(path, "r", encoding="utf8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParse(f"Cannot read job document {path}: {exc}") from exc
    return parse_job(data)


def preset_names() -> List[str]:
    return sorted(name[:-5] for name in os.listdir(PRESETS_PATH) if name.endswith(".json"))


def load_preset(name: str) -> JobConfig:
    path = os.path.join(PRESETS_PATH, f"{name}.json")
    if not os.path.exists(path):
        raise ConfigParse(f"Unknown preset {name!r}; known: {preset_names()}")
    return load_job(path)
