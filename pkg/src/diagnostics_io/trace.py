import csv
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import fields
from pathlib import Path


@dataclass
class TraceRow:
    """
    Diagnostics of one accepted step. Energies are per unit depth.

    Attributes:
        step (int): Step index, 0 for the initial state.
        t_s (float): Time at the end of the step.
        dt_s (float): Time step, 0 for the initial state.
        E_kin_J_per_m (float): Kinetic energy.
        E_pot_J_per_m (float): Potential energy.
        dissipation_W_per_m (float): 2 ||mu^{1/2} sym grad u^{n+1/2}||^2.
        mass_kg_per_m (float): Total mass.
        dEkin_actual_W_per_m (float): Kinetic rate from energy differences.
        dEkin_weak_W_per_m (float): Kinetic rate of the weak form.
        dEpot_actual_W_per_m (float): Potential rate from energy differences.
        dEpot_weak_W_per_m (float): Potential rate of the weak form.
        div_L1 (float): L1 norm of div u^{n+1/2}.
        div_L2 (float): L2 norm of div u^{n+1/2}.
        div_Linf (float): Maximum of |div u^{n+1/2}| at the quadrature points.
        h1_kg_per_m (float): Mass defect at acceptance.
        h2_W_per_m (float): Kinetic-energy defect at acceptance.
        h3_W_per_m (float): Potential-energy defect at acceptance.
        lambda1 (float): Mass multiplier.
        lambda2 (float): Kinetic-energy multiplier.
        lambda3 (float): Potential-energy multiplier.
        global_iterations (int): Quasi-Newton iterations.
        krylov_iterations (int): GMRES iterations.
    """

    step: int
    t_s: float
    dt_s: float
    E_kin_J_per_m: float
    E_pot_J_per_m: float
    dissipation_W_per_m: float
    mass_kg_per_m: float
    dEkin_actual_W_per_m: float
    dEkin_weak_W_per_m: float
    dEpot_actual_W_per_m: float
    dEpot_weak_W_per_m: float
    div_L1: float
    div_L2: float
    div_Linf: float
    h1_kg_per_m: float
    h2_W_per_m: float
    h3_W_per_m: float
    lambda1: float
    lambda2: float
    lambda3: float
    global_iterations: int
    krylov_iterations: int

    @property
    def total_energy(self) -> float:
        return self.E_kin_J_per_m + self.E_pot_J_per_m


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))


class TraceWriter:
    """
    Append-only CSV trace, flushed after every row so that it survives an abort.

    Usable as a context manager.

    Attributes:
        path (Path): The CSV file.
        rows (list[TraceRow]): Rows written so far.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.rows = []
        self._file = open(self.path, "w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=TRACE_COLUMNS)
        self._writer.writeheader()
        self._file.flush()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def append(self, row: TraceRow) -> None:
        """
        Writes one row.

        Args:
            row (TraceRow): The row; its time must exceed the previous row's.

        Raises:
            ValueError: If the time does not increase.
        """
        if self.rows and row.t_s <= self.rows[-1].t_s:
            raise ValueError(f"trace time {row.t_s} does not increase past {self.rows[-1].t_s}")
        self._writer.writerow(asdict(row))
        self._file.flush()
        self.rows.append(row)

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()


def write_trace_csv(trace: list[TraceRow], path: str | Path) -> Path:
    """
    Writes a complete trace.

    Args:
        trace (list[TraceRow]): Rows in increasing time.
        path (str | Path): Destination.

    Returns:
        Path: The written file.
    """
    with TraceWriter(path) as writer:
        for row in trace:
            writer.append(row)
    return writer.path


def read_trace_csv(path: str | Path) -> list[TraceRow]:
    """Reads a trace written by TraceWriter."""
    types = {f.name: f.type for f in fields(TraceRow)}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        return [
            TraceRow(**{key: (int(value) if types[key] in (int, "int") else float(value)) for key, value in record.items()})
            for record in reader
        ]
