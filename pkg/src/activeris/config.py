"""On-disk configuration: a versioned INI file read with :mod:`configparser`.

Every section and key is optional; missing entries take the library
defaults. Example::

    [meta]
    schema_version = 1

    [system]
    M = 4
    K = 4
    L = 64
    p_bs_dbm = 10
    p_elem_dbm = 0.1
    sigma_v2_dbm = -90
    sigma2_dbm = -90

    [amplifier]
    p_in_min = -100
    p_in_m = -80
    p_in_max = -70
    linear_slope = -0.195
    linear_intercept = 22.46

    [channel]
    c0_db = -30
    alpha_bs_ris = 3.2
    alpha_ris_user = 2.7
    rician_factor = 1

    [geometry]
    bs_position = 0, -40
    ris_position = 400, 15
    user_center = 400, 0
    user_radius = 8

    [solver]
    outer_tol = 1e-4
    max_outer_iters = 100
    init_strategy = lock_search
    ideal_gain_db =            ; empty: amplifier nominal gain
    practical_warm_start = true

    [experiment]
    seed = 0
    realizations = 50
    modes = practical_active, ideal_active, passive
    power_dbm = 6, 9, 12, 15, 18, 21
    position_x_m = 350, 375, 400, 425, 450
    elements = 16, 32, 64, 128
    workers = 1
"""

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .amplifier import AmplifierModel
from .channel import Geometry, PathLossParams
from .solver import MODES, SolverOptions
from .system import SystemConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class RunSettings:
    """Everything a CLI run needs, as parsed from a config file."""

    system: SystemConfig = field(default_factory=SystemConfig)
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    geometry: Geometry = field(default_factory=Geometry)
    rician_factor: float = 1.0
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(init_strategy="lock_search"))
    practical_warm_start: bool = True
    seed: int = 0
    realizations: int = 50
    modes: tuple = MODES
    power_dbm: tuple = (6.0, 9.0, 12.0, 15.0, 18.0, 21.0)
    position_x_m: tuple = (350.0, 375.0, 400.0, 425.0, 450.0)
    elements: tuple = (16, 32, 64, 128)
    workers: int = 1


_SYSTEM_KEYS = {"M": int, "K": int, "L": int}
_SYSTEM_DBM = ("p_bs_dbm", "p_elem_dbm", "sigma_v2_dbm", "sigma2_dbm")


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _pair(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise ConfigError(f"expected 'x, y', got {text!r}")
    return vals


def _section(parser, name):
    return parser[name] if parser.has_section(name) else {}


def _typed(section, name, cast, known):
    """Read ``name`` from ``section`` converting with ``cast``."""
    known.add(name)
    raw = section.get(name)
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r} ({exc})") from None


def _check_unknown(parser, name, known):
    if parser.has_section(name):
        extra = set(parser[name].keys()) - known
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def parse_config(text):
    """Parse configuration text into :class:`RunSettings`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    allowed = {"meta", "system", "amplifier", "channel", "geometry", "solver", "experiment"}
    unknown = set(parser.sections()) - allowed
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if parser.has_section("meta"):
        version = parser["meta"].get("schema_version")
        if version is not None and version.strip() != str(SCHEMA_VERSION):
            raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        _check_unknown(parser, "meta", {"schema_version"})

    out = RunSettings()
    try:
        # amplifier
        sec, known = _section(parser, "amplifier"), set()
        amp_kw = {
            f.name: v
            for f in fields(AmplifierModel)
            if (v := _typed(sec, f.name, float, known)) is not None
        }
        _check_unknown(parser, "amplifier", known)
        amp = AmplifierModel(**amp_kw)

        # system
        sec, known = _section(parser, "system"), set()
        sys_kw = {k: v for k, c in _SYSTEM_KEYS.items() if (v := _typed(sec, k, c, known)) is not None}
        sys_kw |= {k: v for k in _SYSTEM_DBM if (v := _typed(sec, k, float, known)) is not None}
        _check_unknown(parser, "system", known)
        out.system = SystemConfig.from_dbm(amplifier=amp, **sys_kw)

        # channel
        sec, known = _section(parser, "channel"), set()
        pl_kw = {
            f.name: v
            for f in fields(PathLossParams)
            if (v := _typed(sec, f.name, float, known)) is not None
        }
        out.path_loss = PathLossParams(**pl_kw)
        beta = _typed(sec, "rician_factor", float, known)
        if beta is not None:
            if beta < 0:
                raise ConfigError("rician_factor must be >= 0")
            out.rician_factor = beta
        _check_unknown(parser, "channel", known)

        # geometry
        sec, known = _section(parser, "geometry"), set()
        geo_kw = {
            k: v
            for k in ("bs_position", "ris_position", "user_center")
            if (v := _typed(sec, k, _pair, known)) is not None
        }
        radius = _typed(sec, "user_radius", float, known)
        if radius is not None:
            geo_kw["user_radius"] = radius
        _check_unknown(parser, "geometry", known)
        out.geometry = Geometry(**geo_kw)

        # solver
        sec, known = _section(parser, "solver"), set()
        solver_kw = {}
        casts = {
            "outer_tol": float,
            "max_outer_iters": int,
            "qcqp_tol": float,
            "qcqp_max_iter": int,
            "disk_tol": float,
            "disk_max_iter": int,
            "init_strategy": str.strip,
            "reevaluate": _bool,
            "probe_iters": int,
        }
        for key, cast in casts.items():
            v = _typed(sec, key, cast, known)
            if v is not None:
                solver_kw[key] = v
        gain = _typed(sec, "ideal_gain_db", str.strip, known)
        if gain:
            solver_kw["ideal_gain_db"] = float(gain)
        warm = _typed(sec, "practical_warm_start", _bool, known)
        if warm is not None:
            out.practical_warm_start = warm
        _check_unknown(parser, "solver", known)
        out.solver = SolverOptions(**({"init_strategy": "lock_search"} | solver_kw))

        # experiment
        sec, known = _section(parser, "experiment"), set()
        for key, cast in (("seed", int), ("realizations", int), ("workers", int)):
            v = _typed(sec, key, cast, known)
            if v is not None:
                setattr(out, key, v)
        modes = _typed(sec, "modes", lambda t: tuple(m.strip() for m in t.split(",") if m.strip()), known)
        if modes is not None:
            out.modes = check_modes(modes)
        for key, cast in (("power_dbm", _floats), ("position_x_m", _floats)):
            v = _typed(sec, key, cast, known)
            if v is not None:
                setattr(out, key, v)
        elems = _typed(sec, "elements", lambda t: tuple(int(float(x)) for x in _floats(t)), known)
        if elems is not None:
            out.elements = elems
        _check_unknown(parser, "experiment", known)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if out.realizations < 1:
        raise ConfigError("realizations must be >= 1")
    if not 0 <= out.seed < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return out


def load_config(path):
    """Read and parse a config file; errors name the path."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def check_modes(modes):
    modes = tuple(modes)
    bad = [m for m in modes if m not in MODES]
    if bad or not modes:
        raise ConfigError(f"unknown mode(s) {bad}; choose from {', '.join(MODES)}")
    return modes
