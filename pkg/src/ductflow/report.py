"""Per-solve iteration record shared by both solvers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class SolveReport:
    """Histories and counters of one solver run.

    ``iterations`` counts outer-loop passes, including the pass that
    triggers the stopping test.  ``cg_iterations`` holds one
    ``(count, exit_reason)`` pair per pass that invoked the inner CG
    solver; the augmented-Lagrangian solver leaves it empty.
    """

    iterations: int = 0
    accepted_steps: int = 0
    rejected_steps: int = 0
    kkt_history: list[float] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)
    radius_history: list[float] = field(default_factory=list)
    feasibility_history: list[float] = field(default_factory=list)
    cg_iterations: list[tuple[int, str]] = field(default_factory=list)
    status: str = "max_iterations"
    wall_time: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        data = asdict(self)
        data["cg_iterations"] = [[count, reason] for count, reason in self.cg_iterations]
        return data
