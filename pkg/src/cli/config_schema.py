"""
Scenario files: strict TOML parsing into frozen configuration dataclasses
"""

import difflib
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

try:
    from ..config import Config
except ImportError:
    from config import Config

MODEL_KINDS = ("t3_contact", "levelset", "magnetic_torus", "hyperbolic_utb")
HAMILTONIANS = ("sphere", "ellipsoid", "custom")
TASKS = ("lk", "currents", "orbits", "ergodicity", "certify")
MEASURES = ("volume", "empirical", "orbit")
SCHEMES = ("grid", "monte_carlo")
PARAMETRIZATIONS = ("characteristic", "hamiltonian")

# model keys accepted per kind, besides "kind"
MODEL_KEYS = {
    "t3_contact": (),
    "levelset": ("hamiltonian", "a", "b", "level", "terms"),
    "magnetic_torus": ("epsilon", "potential"),
    "hyperbolic_utb": ("epsilon",),
}


class ConfigError(ValueError):
    """Invalid scenario configuration; names the offending field and line"""

    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        self.message = message
        where = f"{path}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ModelConfig:
    """Catalog model selection"""
    kind: str
    hamiltonian: Optional[str] = None
    a: Optional[float] = None
    b: Optional[float] = None
    level: Optional[float] = None
    terms: Tuple[Tuple[float, Tuple[int, int, int, int]], ...] = ()
    epsilon: Optional[float] = None
    potential: Tuple[Tuple[float, int, int, str], ...] = ()


@dataclass(frozen=True)
class IntegratorConfig:
    tol: float = Config.INTEGRATOR_TOL
    parametrization: str = "characteristic"
    flow_time: float = 20.0
    samples: int = 256


@dataclass(frozen=True)
class QuadratureConfig:
    scheme: Optional[str] = None
    resolution: Optional[int] = None


@dataclass(frozen=True)
class OrbitConfig:
    seeds: int = 16
    max_period: Optional[float] = None
    tol: float = Config.ORBIT_TOL
    section_coordinate: Optional[int] = None
    section_value: float = 0.0


@dataclass(frozen=True)
class ErgodicityConfig:
    seeds: int = 8
    horizons: Tuple[float, ...] = (1e2, 1e3, 1e4)
    fail_threshold: float = Config.UE_FAIL_THRESHOLD
    decay_factor: float = Config.UE_DECAY_FACTOR


@dataclass(frozen=True)
class CertifyConfig:
    basis_cap: int = 3
    samples: int = 4096


@dataclass(frozen=True)
class CurrentsConfig:
    measures: Tuple[str, ...] = ("volume",)
    exact_forms: int = 10
    horizon: float = 100.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; the dictionary echo re-parses to an equal config"""
    model: ModelConfig
    tasks: Tuple[str, ...]
    name: Optional[str] = None
    seed: int = 0
    output: str = Config.OUTPUT_DIR
    formats: Tuple[str, ...] = ("json", "csv", "plotdata")
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    orbits: OrbitConfig = field(default_factory=OrbitConfig)
    ergodicity: ErgodicityConfig = field(default_factory=ErgodicityConfig)
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    currents: CurrentsConfig = field(default_factory=CurrentsConfig)

    def ordered_tasks(self) -> List[str]:
        """Requested tasks in execution order"""
        return [task for task in TASKS if task in self.tasks]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (tuples become lists, unset model keys are dropped)"""
        data = _listify(asdict(self))
        data["model"] = {k: v for k, v in data["model"].items() if v not in (None, [])}
        for section in ("quadrature", "orbits"):
            data[section] = {k: v for k, v in data[section].items() if v is not None}
        return {k: v for k, v in data.items() if v is not None}


def _listify(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _listify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_listify(v) for v in value]
    return value


class _Locator:
    """Line numbers of keys in the source text"""

    HEADER = re.compile(r"^\s*\[\s*([A-Za-z_][\w.]*)\s*\]\s*(#.*)?$")

    def __init__(self, text: Optional[str]):
        self.lines = text.splitlines() if text else []

    def _header(self, section: str) -> Optional[int]:
        for i, line in enumerate(self.lines):
            match = self.HEADER.match(line)
            if match and match.group(1) == section:
                return i
        return None

    def line(self, path: str) -> Optional[int]:
        """1-based line of a dotted key, of its table header, or None"""
        if not self.lines:
            return None
        parts = path.split(".")
        start = 0
        if len(parts) == 1:
            header = self._header(parts[0])
            if header is not None:
                return header + 1
        else:
            header = self._header(parts[0])
            if header is None:
                return None
            start = header + 1
        key = re.compile(rf"^\s*{re.escape(parts[-1])}\s*=")
        for i in range(start, len(self.lines)):
            if self.HEADER.match(self.lines[i]):
                break
            if key.match(self.lines[i]):
                return i + 1
        return start if len(parts) > 1 else None


Converter = Callable[[Any, str], Any]


def _name(path: str) -> str:
    return path.rsplit(".", 1)[-1]


def _number(positive: bool = True, optional: bool = False) -> Converter:
    def convert(value: Any, path: str) -> Any:
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"{_name(path)} must be a number, got {type(value).__name__}")
        if positive and value <= 0:
            raise ConfigError(path, f"{_name(path)} must be positive")
        return float(value)
    return convert


def _integer(minimum: Optional[int] = 1, maximum: Optional[int] = None,
             optional: bool = False) -> Converter:
    def convert(value: Any, path: str) -> Any:
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"{_name(path)} must be an integer, got {type(value).__name__}")
        if minimum is not None and value < minimum:
            raise ConfigError(path, f"{_name(path)} must be at least {minimum}")
        if maximum is not None and value > maximum:
            raise ConfigError(path, f"{_name(path)} must be at most {maximum}")
        return value
    return convert


def _choice(choices: Sequence[str], optional: bool = False) -> Converter:
    def convert(value: Any, path: str) -> Any:
        if value is None and optional:
            return None
        if not isinstance(value, str):
            raise ConfigError(path, f"{_name(path)} must be a string, got {type(value).__name__}")
        if value not in choices:
            raise ConfigError(path, f"unknown {_name(path)} '{value}'{_suggestion(value, choices)}; "
                                    f"expected one of {list(choices)}")
        return value
    return convert


def _text(value: Any, path: str) -> Optional[str]:
    if value is not None and not isinstance(value, str):
        raise ConfigError(path, f"{_name(path)} must be a string, got {type(value).__name__}")
    return value


def _choice_list(choices: Sequence[str], allow_empty: bool = False) -> Converter:
    single = _choice(choices)

    def convert(value: Any, path: str) -> Tuple[str, ...]:
        if not isinstance(value, list):
            raise ConfigError(path, f"{_name(path)} must be a list")
        if not value and not allow_empty:
            raise ConfigError(path, f"{_name(path)} must not be empty")
        items = tuple(single(v, path) for v in value)
        if len(set(items)) != len(items):
            raise ConfigError(path, f"{_name(path)} contains duplicates")
        return items
    return convert


def _horizons(value: Any, path: str) -> Tuple[float, ...]:
    if not isinstance(value, list) or len(value) < 3:
        raise ConfigError(path, "horizons must be a list of at least 3 values")
    number = _number()
    values = tuple(number(v, path) for v in value)
    if any(b <= a for a, b in zip(values[:-1], values[1:])):
        raise ConfigError(path, "horizons must be strictly increasing")
    return values


def _terms(value: Any, path: str) -> Tuple[Tuple[float, Tuple[int, int, int, int]], ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "terms must be a non-empty list of [coefficient, [e0, e1, e2, e3]]")
    number = _number(positive=False)
    exponent = _integer(minimum=0)
    terms = []
    for i, term in enumerate(value):
        item = f"{path}[{i}]"
        if not isinstance(term, list) or len(term) != 2 or not isinstance(term[1], list) or len(term[1]) != 4:
            raise ConfigError(item, "term must be [coefficient, [e0, e1, e2, e3]]")
        terms.append((number(term[0], item), tuple(exponent(e, item) for e in term[1])))
    return tuple(terms)


def _potential(value: Any, path: str) -> Tuple[Tuple[float, int, int, str], ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "potential must be a non-empty list of [amplitude, kx, ky, kind]")
    number = _number(positive=False)
    wave = _integer(minimum=None)
    kind = _choice(("sin", "cos"))
    terms = []
    for i, term in enumerate(value):
        item = f"{path}[{i}]"
        if not isinstance(term, list) or len(term) != 4:
            raise ConfigError(item, "potential term must be [amplitude, kx, ky, kind]")
        terms.append((number(term[0], item), wave(term[1], item), wave(term[2], item), kind(term[3], item)))
    return tuple(terms)


SECTIONS: Dict[str, Tuple[type, Dict[str, Converter]]] = {
    "integrator": (IntegratorConfig, {
        "tol": _number(),
        "parametrization": _choice(PARAMETRIZATIONS),
        "flow_time": _number(),
        "samples": _integer(minimum=2),
    }),
    "quadrature": (QuadratureConfig, {
        "scheme": _choice(SCHEMES, optional=True),
        "resolution": _integer(minimum=4, optional=True),
    }),
    "orbits": (OrbitConfig, {
        "seeds": _integer(),
        "max_period": _number(optional=True),
        "tol": _number(),
        "section_coordinate": _integer(minimum=0, maximum=3, optional=True),
        "section_value": _number(positive=False),
    }),
    "ergodicity": (ErgodicityConfig, {
        "seeds": _integer(minimum=8),
        "horizons": _horizons,
        "fail_threshold": _number(),
        "decay_factor": _number(),
    }),
    "certify": (CertifyConfig, {
        "basis_cap": _integer(),
        "samples": _integer(),
    }),
    "currents": (CurrentsConfig, {
        "measures": _choice_list(MEASURES),
        "exact_forms": _integer(minimum=0),
        "horizon": _number(),
    }),
}

MODEL_CONVERTERS: Dict[str, Converter] = {
    "hamiltonian": _choice(HAMILTONIANS),
    "a": _number(),
    "b": _number(),
    "level": _number(),
    "terms": _terms,
    "epsilon": _number(),
    "potential": _potential,
}

TOP_LEVEL: Dict[str, Converter] = {
    "name": _text,
    "seed": _integer(minimum=0),
    "output": _text,
    "formats": _choice_list(Config.SUPPORTED_FORMATS),
    "tasks": _choice_list(TASKS),
}


def _suggestion(key: str, allowed: Sequence[str]) -> str:
    match = difflib.get_close_matches(key, list(allowed), n=1)
    return f" (did you mean '{match[0]}'?)" if match else ""


def _reject_unknown(data: Mapping[str, Any], allowed: Sequence[str], prefix: str,
                    locator: _Locator) -> None:
    for key in data:
        if key not in allowed:
            path = f"{prefix}{key}"
            raise ConfigError(path, f"unknown key '{key}'{_suggestion(key, allowed)}",
                              locator.line(path))


def _convert(converters: Mapping[str, Converter], data: Mapping[str, Any], prefix: str,
             locator: _Locator) -> Dict[str, Any]:
    values = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        try:
            values[key] = converters[key](value, path)
        except ConfigError as e:
            if e.line is not None:
                raise
            raise ConfigError(e.path, e.message, locator.line(e.path.split("[")[0])) from None
    return values


def _model_config(data: Any, locator: _Locator) -> ModelConfig:
    if not isinstance(data, dict):
        raise ConfigError("model", "model must be a table", locator.line("model"))
    if "kind" not in data:
        raise ConfigError("model.kind", "missing required field 'kind'", locator.line("model.kind"))
    kind = _convert({"kind": _choice(MODEL_KINDS)}, {"kind": data["kind"]}, "model.", locator)["kind"]
    allowed = ("kind",) + MODEL_KEYS[kind]
    for key in data:
        if key not in allowed and key in MODEL_CONVERTERS:
            raise ConfigError(f"model.{key}", f"key '{key}' does not apply to model kind '{kind}'",
                              locator.line(f"model.{key}"))
    _reject_unknown(data, allowed, "model.", locator)
    values = _convert(MODEL_CONVERTERS, {k: v for k, v in data.items() if k != "kind"}, "model.", locator)

    if kind in ("magnetic_torus", "hyperbolic_utb") and "epsilon" not in values:
        raise ConfigError("model.epsilon", "missing required field 'epsilon'", locator.line("model"))
    if kind == "levelset":
        hamiltonian = values.get("hamiltonian")
        if hamiltonian is None:
            raise ConfigError("model.hamiltonian", "missing required field 'hamiltonian'", locator.line("model"))
        needed = {"sphere": (), "ellipsoid": ("a", "b"), "custom": ("terms", "level")}[hamiltonian]
        for key in needed:
            if key not in values:
                raise ConfigError(f"model.{key}", f"missing required field '{key}' for hamiltonian '{hamiltonian}'",
                                  locator.line("model"))
        if hamiltonian != "custom" and "terms" in values:
            raise ConfigError("model.terms", "terms only apply to a custom hamiltonian", locator.line("model.terms"))
        if hamiltonian != "ellipsoid" and ("a" in values or "b" in values):
            key = "a" if "a" in values else "b"
            raise ConfigError(f"model.{key}", f"'{key}' only applies to an ellipsoid hamiltonian",
                              locator.line(f"model.{key}"))
    return ModelConfig(kind=kind, **values)


def config_from_dict(data: Mapping[str, Any], text: Optional[str] = None) -> ScenarioConfig:
    """
    Validate a decoded scenario mapping.

    Args:
        data: Decoded TOML (or a ScenarioConfig.to_dict() echo)
        text: Source text, used only for line numbers in errors

    Returns:
        ScenarioConfig with defaults filled

    Raises:
        ConfigError: unknown key, type mismatch or missing required field
    """
    locator = _Locator(text)
    _reject_unknown(data, list(TOP_LEVEL) + ["model"] + list(SECTIONS), "", locator)
    if "model" not in data:
        raise ConfigError("model", "missing required field 'model'")
    if "tasks" not in data:
        raise ConfigError("tasks", "missing required field 'tasks'")

    top = _convert(TOP_LEVEL, {k: v for k, v in data.items() if k in TOP_LEVEL}, "", locator)
    sections = {}
    for section, (cls, converters) in SECTIONS.items():
        if section not in data:
            continue
        table = data[section]
        if not isinstance(table, dict):
            raise ConfigError(section, f"{section} must be a table", locator.line(section))
        _reject_unknown(table, list(converters), f"{section}.", locator)
        sections[section] = cls(**_convert(converters, table, f"{section}.", locator))

    return ScenarioConfig(model=_model_config(data["model"], locator), **top, **sections)


def parse_config(text: str) -> ScenarioConfig:
    """Strictly parse a TOML scenario"""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        raise ConfigError("<document>", f"invalid TOML: {e}", line) from e
    return config_from_dict(data, text)


def load_config(path: str) -> ScenarioConfig:
    """Parse a scenario file"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("<file>", f"cannot read scenario {path}: {e}") from e
    return parse_config(text)
