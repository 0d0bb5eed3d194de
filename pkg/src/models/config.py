import cmath
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    field_validator,
    model_validator,
)

from ..dynamics.correspondence import AlgebraicPart, AlgebraicTerm, ElementaryCorrespondence
from ..dynamics.elementary import ElementaryMap, min_truncation_degree, plan_renormalization
from ..errors import ConfigError
from ..series import CoefficientRule


def _parse_complex(value: Any) -> complex:
    """Accept a number, a ``[re, im]`` pair or a complex literal string."""
    if isinstance(value, bool):
        raise ValueError("booleans are not complex numbers")
    if isinstance(value, (int, float, complex)):
        z = complex(value)
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        z = complex(float(value[0]), float(value[1]))
    elif isinstance(value, str):
        try:
            z = complex(value.replace(" ", ""))
        except ValueError as e:
            raise ValueError(f"not a complex literal: {value!r}") from e
    else:
        raise ValueError(f"expected a number, [re, im] pair or string, got {value!r}")
    if not cmath.isfinite(z):
        raise ValueError("complex value must be finite")
    return z


ComplexValue = Annotated[
    complex,
    BeforeValidator(_parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


class Mode(str, Enum):
    ITERATE = "iterate"
    RENORM = "renorm"
    LIMIT = "limit"
    SCAN = "scan"
    ZALCMAN = "zalcman"
    COUNTEREXAMPLE = "counterexample"
    CORRESPONDENCE = "correspondence"
    BASIN = "basin"


ELEMENTARY_MODES = {Mode.ITERATE, Mode.RENORM, Mode.LIMIT, Mode.SCAN, Mode.COUNTEREXAMPLE}
GUARDED_MODES = {Mode.RENORM, Mode.LIMIT, Mode.SCAN}


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MapSection(Section):
    """The elementary map ``(alpha*u, beta*v + h(u))``."""

    alpha: ComplexValue
    beta: ComplexValue
    h: Optional[List[ComplexValue]] = Field(
        default=None, description="Polynomial coefficients of h, lowest degree first"
    )
    rule: Optional[str] = Field(default=None, description="Named coefficient rule for h")
    rule_params: Dict[str, ComplexValue] = Field(default_factory=dict)
    N: Union[int, Literal["auto"], None] = Field(
        default=None, description="Truncation degree, or 'auto' for the least admissible one"
    )
    order: int = Field(default=32, ge=1, le=1024, description="Jet order K")

    @field_validator("N")
    @classmethod
    def _positive_N(cls, value):
        if isinstance(value, int) and value < 1:
            raise ValueError("N must be >= 1")
        return value

    @model_validator(mode="after")
    def _one_source(self) -> "MapSection":
        if self.h is not None and self.rule is not None:
            raise ValueError("give either h or rule, not both")
        return self

    def coefficient_rule(self) -> CoefficientRule:
        if self.rule is not None:
            return CoefficientRule.named(self.rule, **self.rule_params)
        return CoefficientRule.polynomial(self.h or [0.0])

    def build(self) -> ElementaryMap:
        return ElementaryMap(self.alpha, self.beta, self.coefficient_rule())


class ScanSection(Section):
    radius: float = Field(default=2.0, gt=0, allow_inf_nan=False)
    grid: int = Field(default=21, ge=2)
    n_list: List[int] = Field(default_factory=lambda: list(range(5, 101, 5)), min_length=1)

    @field_validator("n_list")
    @classmethod
    def _positive_depths(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError("n_list entries must be >= 1")
        return value


class IterateSection(Section):
    n_max: int = Field(default=8, ge=1, le=64)


class CounterexampleSection(Section):
    k_max: int = Field(default=50, ge=1, le=2000)


class ZalcmanSection(Section):
    family: Literal["linear", "power"] = "linear"
    count: int = Field(default=50, ge=1, le=500)
    grid: int = Field(default=41, ge=2)
    center: ComplexValue = 0j
    radius: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    v: ComplexValue = 0j
    max_index: Optional[int] = Field(default=None, ge=1)
    witness: bool = Field(
        default=False, description="Also certify non-normality of the map iterates"
    )
    witness_n_max: int = Field(default=30, ge=1)
    witness_threshold: float = Field(default=1e6, gt=0)
    axiom_triples: int = Field(default=200, ge=0)


class AlgebraicTermSection(Section):
    coefficient: ComplexValue = 1.0 + 0j
    branch_point: ComplexValue
    exponent: str = Field(description="Positive rational exponent, e.g. '1/2'")

    @field_validator("exponent", mode="before")
    @classmethod
    def _rational(cls, value: Any) -> str:
        try:
            return str(Fraction(str(value)))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"exponent must be a rational number, got {value!r}") from e


class CorrespondenceSection(Section):
    c1: ComplexValue
    c2: ComplexValue
    entire: List[ComplexValue] = Field(default_factory=lambda: [0j])
    algebraic: List[AlgebraicTermSection] = Field(default_factory=list)
    normalize: bool = Field(
        default=True, description="Shift the algebraic part so it vanishes at 0"
    )
    N: int = Field(default=2, ge=1)
    order: int = Field(default=32, ge=1, le=1024)
    radius: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    grid: int = Field(default=21, ge=2)
    n_list: List[int] = Field(default_factory=lambda: list(range(5, 61, 5)), min_length=1)

    def build(self) -> ElementaryCorrespondence:
        """Raises DomainError for a branch point at 0 and ConstructionError when h(0) != 0."""
        terms = tuple(
            AlgebraicTerm(t.coefficient, t.branch_point, Fraction(t.exponent))
            for t in self.algebraic
        )
        part = AlgebraicPart(terms)
        if self.normalize:
            part = part.normalized()
        return ElementaryCorrespondence(
            self.c1, self.c2, CoefficientRule.polynomial(self.entire), part
        )


class BasinSection(Section):
    automorphism: Literal["diagonal", "shear_diagonal", "foreword"] = "shear_diagonal"
    lambda1: ComplexValue = 2.0 + 0j
    lambda2: ComplexValue = 3.0 + 0j
    shear: List[ComplexValue] = Field(
        default_factory=lambda: [0j, 0j, 1.0 + 0j], description="q in S(z, w) = (z, w + q(z))"
    )
    shift: List[ComplexValue] = Field(default_factory=lambda: [0j, 0j], min_length=2, max_length=2)
    guess: Optional[List[ComplexValue]] = Field(default=None, min_length=2, max_length=2)
    depths: List[int] = Field(default_factory=lambda: [10, 15, 20], min_length=1)
    N: int = Field(default=2, ge=1)
    degree: int = Field(default=3, ge=1, le=12)
    probe_radius: float = Field(default=0.1, gt=0, allow_inf_nan=False)
    probe_grid: int = Field(default=5, ge=2)
    consistency_points: int = Field(default=16, ge=0)


class Tolerances(Section):
    fixed_point: float = Field(default=1e-12, gt=0)
    resonance: float = Field(default=1e-9, gt=0)
    verification: float = Field(default=1e-10, gt=0)
    metric: float = Field(default=1e-12, gt=0)


class ExperimentConfig(Section):
    """A validated experiment description."""

    mode: Mode
    output_dir: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    map: Optional[MapSection] = None
    scan: ScanSection = Field(default_factory=ScanSection)
    iterate: IterateSection = Field(default_factory=IterateSection)
    counterexample: CounterexampleSection = Field(default_factory=CounterexampleSection)
    zalcman: ZalcmanSection = Field(default_factory=ZalcmanSection)
    correspondence: Optional[CorrespondenceSection] = None
    basin: BasinSection = Field(default_factory=BasinSection)
    tolerance: Tolerances = Field(default_factory=Tolerances)

    @model_validator(mode="after")
    def _mode_sections(self) -> "ExperimentConfig":
        if self.mode in ELEMENTARY_MODES and self.map is None:
            raise ValueError(f"mode '{self.mode.value}' requires a [map] section")
        if self.mode == Mode.CORRESPONDENCE and self.correspondence is None:
            raise ValueError("mode 'correspondence' requires a [correspondence] section")
        if self.zalcman.witness and self.map is None:
            raise ValueError("zalcman.witness requires a [map] section")
        return self

    def truncation_degree(self) -> int:
        if self.map is None or not isinstance(self.map.N, int):
            raise ConfigError("truncation degree is not resolved", "map.N", "required")
        return self.map.N

    def resolve(self) -> "ExperimentConfig":
        """Fill an absent or ``"auto"`` ``N`` and run the hypothesis guards of the mode.

        Raises:
            HypothesisViolation: a renormalization hypothesis fails
            DomainError: a structural input is outside the domain
            ConstructionError: the correspondence does not fix 0
        """
        config = self
        if config.mode in GUARDED_MODES:
            F = config.map.build()
            # an absent N means "auto" for the modes that renormalize
            if config.map.N in (None, "auto"):
                config = config.model_copy(
                    update={"map": config.map.model_copy(update={"N": min_truncation_degree(F)})}
                )
            plan_renormalization(F, config.truncation_degree()).require()
        elif config.mode == Mode.CORRESPONDENCE:
            C = config.correspondence.build()
            plan_renormalization(C.entire_map(), config.correspondence.N).require()
        return config


def _field_name(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def validate_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a parsed mapping and resolve it.

    Raises:
        ConfigError: structural or constraint errors, naming the field
    """
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(
            f"invalid config: {_field_name(first)}: {first['msg']}",
            field=_field_name(first),
            constraint=first["type"],
        ) from e
    return config.resolve()


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a TOML experiment config.

    Args:
        path (Union[str, Path]): Config file

    Returns:
        ExperimentConfig: The validated config with ``N`` resolved
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}", "<file>", "exists") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"malformed config file {path}: {e}", "<file>", "toml") from e
    return validate_config(data)
