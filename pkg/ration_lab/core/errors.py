"""
Error types raised across ration_lab
"""


class RationLabError(Exception):
    """Base class for all library errors"""


class ConfigError(RationLabError, ValueError):
    """Invalid experiment or command configuration"""


class InvalidInstance(RationLabError, ValueError):
    """Instance or demand model violates its invariants"""


class InfeasibleAllocation(RationLabError):
    """A policy proposed an allocation above demand or remaining supply"""

    def __init__(self, agent: int, allocation: float, bound: float, what: str = "demand"):
        self.agent = agent
        self.allocation = allocation
        self.bound = bound
        super().__init__(
            f"Agent {agent}: allocation {allocation!r} exceeds {what} {bound!r}"
        )


class DpBudgetExceeded(RationLabError):
    """The dynamic program needs more states than the configured budget"""

    def __init__(self, states: int, budget: int):
        self.states = states
        self.budget = budget
        super().__init__(
            f"DP state count {states} exceeds the configured budget of {budget}"
        )


class SolverFailure(RationLabError):
    """An LP or root-finding routine did not converge"""


class CertificateViolation(RationLabError):
    """A numeric optimum disagrees with its closed-form certificate"""


class SimulationUnstable(RationLabError):
    """An epidemic compartment left its admissible range"""


class BudgetInfeasible(RationLabError, ValueError):
    """Endowment budget cannot buy any supply"""
