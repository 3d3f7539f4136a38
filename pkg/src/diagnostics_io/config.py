import io
from dataclasses import dataclass
from dataclasses import fields
from pathlib import Path

from dotenv.parser import parse_stream

from src.levelset_kernel.properties import FluidParams
from src.linear_solver.krylov import KrylovConfig
from src.spline_spaces.spaces import Rectangle
from src.time_stepper.controller import StepControl
from src.twofluid_forms.state import FormKind
from src.utils.errors import ConfigError

REQUIRED_KEYS = ("n_x", "n_y", "formulation", "end_time")


@dataclass(frozen=True)
class RunConfig:
    """
    A complete run description. The defaults reproduce the dambreak case on the
    coarsest mesh.

    Attributes:
        n_x, n_y (int): Elements per direction.
        degree (int): Degree of the pressure space.
        domain_width, domain_height (float): Box size in meters.
        column_width, column_height (float): Water column in the lower-left corner, meters.
        rho0, rho1 (float): Densities of air (phi < 0) and water in kg/m^3.
        mu0, mu1 (float): Viscosities in kg/(m s).
        g_x, g_y (float): Gravity in m/s^2.
        eps_smooth (float): Smoothing of the alpha projection.
        formulation (str): "conservative", "energy-corrected" or "convective".
        constraints (tuple[str, ...] | None): Override of the constraint set.
        cfl_target, kp (float): Time-step controller.
        dt_init, dt_min, dt_max (float): Time-step bounds in seconds.
        dt_growth_limit (float | None): Cap on the step-to-step growth of dt.
        end_time (float): Final time in seconds.
        output_dir (str): Directory of the trace and the snapshots.
        snapshot_times (tuple[float, ...]): Snapshot times in seconds.
        snapshot_resolution (int): Snapshot points per element and direction.
        eps1, eps2 (float): Nonlinear and constraint tolerances.
        max_global_iters, max_retries (int): Nonlinear iteration limits.
        quadrature_order (int): Gauss points per direction.
        tau_linearization (str): "frozen" or "exact".
        cond_limit (float): Constraint deactivation threshold.
        krylov_rel_tol, krylov_abs_tol (float): GMRES tolerances.
        krylov_restart, krylov_max_iters (int): GMRES limits.
        preconditioner (str): "ilu" or "jacobi".
        ilu_drop_tol, ilu_fill_factor (float): Incomplete factorisation settings.
    """

    n_x: int = 40
    n_y: int = 20
    degree: int = 1
    domain_width: float = 0.584
    domain_height: float = 0.3504
    column_width: float = 0.146
    column_height: float = 0.292
    rho0: float = 1.0
    rho1: float = 1000.0
    mu0: float = 2.0
    mu1: float = 2.0
    g_x: float = 0.0
    g_y: float = -9.81
    eps_smooth: float = 1.0
    formulation: str = "energy-corrected"
    constraints: tuple[str, ...] | None = None
    cfl_target: float = 0.75
    kp: float = 0.75
    dt_init: float = 1e-3
    dt_min: float = 1e-6
    dt_max: float = 0.05
    dt_growth_limit: float | None = None
    end_time: float = 0.8
    output_dir: str = "output"
    snapshot_times: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    snapshot_resolution: int = 4
    eps1: float = 1e-3
    eps2: float = 1e-12
    max_global_iters: int = 30
    max_retries: int = 3
    quadrature_order: int = 3
    tau_linearization: str = "frozen"
    cond_limit: float = 1e12
    krylov_rel_tol: float = 1e-9
    krylov_abs_tol: float = 1e-14
    krylov_restart: int = 60
    krylov_max_iters: int = 2000
    preconditioner: str = "ilu"
    ilu_drop_tol: float = 1e-5
    ilu_fill_factor: float = 20.0

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2:
            raise ConfigError(f"the mesh needs at least 2x2 elements, got {self.n_x}x{self.n_y}")
        if self.column_width > self.domain_width or self.column_height > self.domain_height:
            raise ConfigError("the water column does not fit inside the domain")
        if self.end_time <= 0.0:
            raise ConfigError(f"end_time must be positive, got {self.end_time}")
        if any(t < 0.0 for t in self.snapshot_times):
            raise ConfigError("snapshot times must be non-negative")
        try:
            self.form_kind()
            self.fluid_params()
            self.step_control()
            self.krylov_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def domain(self) -> Rectangle:
        return Rectangle(0.0, 0.0, self.domain_width, self.domain_height)

    @property
    def column(self) -> Rectangle:
        return Rectangle(0.0, 0.0, self.column_width, self.column_height)

    def form_kind(self) -> FormKind:
        return FormKind.from_name(self.formulation, self.constraints)

    def fluid_params(self) -> FluidParams:
        return FluidParams(
            rho0=self.rho0,
            rho1=self.rho1,
            mu0=self.mu0,
            mu1=self.mu1,
            g=(self.g_x, self.g_y),
            eps_smooth=self.eps_smooth,
        )

    def step_control(self) -> StepControl:
        return StepControl(
            cfl_target=self.cfl_target,
            kp=self.kp,
            dt_init=self.dt_init,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            eps1=self.eps1,
            eps2=self.eps2,
            max_global_iters=self.max_global_iters,
            max_retries=self.max_retries,
            dt_growth_limit=self.dt_growth_limit,
            tau_linearization=self.tau_linearization,
            cond_limit=self.cond_limit,
        )

    def krylov_config(self) -> KrylovConfig:
        return KrylovConfig(
            rel_tol=self.krylov_rel_tol,
            abs_tol=self.krylov_abs_tol,
            restart=self.krylov_restart,
            max_iters=self.krylov_max_iters,
            preconditioner=self.preconditioner,
            ilu_drop_tol=self.ilu_drop_tol,
            ilu_fill_factor=self.ilu_fill_factor,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, text: str):
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is str:
        return text
    if key == "dt_growth_limit":
        return None if text.lower() == "none" else float(text)
    if key == "snapshot_times":
        return tuple(float(v) for v in text.split(",") if v.strip())
    if key == "constraints":
        if text.lower() == "default":
            return None
        if text.lower() == "none":
            return ()
        return tuple(v.strip() for v in text.split(",") if v.strip())
    raise ConfigError(f"no converter for key '{key}'")


def _format(key: str, value) -> str:
    if value is None:
        return "default" if key == "constraints" else "none"
    if key == "constraints":
        return ", ".join(value) if value else "none"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """
    Parses flat key = value text with '#' comments.

    Args:
        text (str): The configuration text.
        source (str): Name used in error messages.

    Returns:
        RunConfig: The configuration.

    Raises:
        ConfigError: On syntax errors, unknown or missing keys and malformed values.
    """
    values = {}
    unknown = []
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"{source}:{line}: cannot parse '{binding.original.string.strip()}'")
        if binding.key is None:
            continue
        if binding.key not in _FIELD_TYPES:
            unknown.append(binding.key)
            continue
        if binding.value is None:
            raise ConfigError(f"{source}:{line}: key '{binding.key}' has no value")
        try:
            values[binding.key] = _convert(binding.key, binding.value)
        except ValueError:
            raise ConfigError(
                f"{source}:{line}: malformed value '{binding.value}' for key '{binding.key}'"
            ) from None
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(unknown)}")
    missing = [key for key in REQUIRED_KEYS if key not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    return RunConfig(**values)


def parse_config(path: str | Path) -> RunConfig:
    """
    Reads a case file.

    Args:
        path (str | Path): The file.

    Returns:
        RunConfig: The configuration.

    Raises:
        ConfigError: If the file cannot be read or is invalid.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def format_config(config: RunConfig) -> str:
    lines = ["# two-fluid run configuration"]
    lines += [f"{f.name} = {_format(f.name, getattr(config, f.name))}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def write_config(config: RunConfig, path: str | Path) -> Path:
    """
    Writes a case file that parse_config reads back to an equal RunConfig.

    Args:
        config (RunConfig): The configuration.
        path (str | Path): Destination.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(config))
    return path
