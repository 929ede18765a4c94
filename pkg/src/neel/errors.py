"""Exception types raised across the package.

Every error carries a ``details`` dict so the CLI can emit a machine-readable
record without knowing the concrete class.
"""

from __future__ import annotations


class NeelError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def record(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "details": self.details}


class GridMismatch(NeelError):
    pass


class NonConvergence(NeelError):
    def __init__(self, iterations: int, last_residual: float, history=None, hint: str = ""):
        msg = f"no convergence after {iterations} iterations (last residual {last_residual:.3e})"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg, iterations=iterations, last_residual=float(last_residual),
                         history=[float(h) for h in (history or [])])
        self.iterations = iterations
        self.last_residual = last_residual


class DenseCapExceeded(NeelError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"dense assembly of size {size} exceeds cap {cap}", size=size, cap=cap)


class BlowUp(NeelError):
    def __init__(self, norm: float, time: float):
        super().__init__(f"H1 norm {norm:.3e} exceeded the blow-up threshold at t={time:.6g}",
                         norm=float(norm), time=float(time))
        self.norm = norm


class NoRootInBracket(NeelError):
    def __init__(self, x: float, bound: float):
        super().__init__(f"translation estimate {x:.4g} left the bracket |X| <= {bound:.4g}",
                         x=float(x), bound=float(bound))


class ArnoldiStagnation(NeelError):
    pass


class EigensolverBreakdown(NeelError):
    pass


class ForcingError(NeelError):
    pass


class ParseError(NeelError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}", line=line, reason=reason)
        self.line = line
        self.reason = reason


class ValidationError(NeelError):
    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}", key=key, constraint=constraint)
        self.key = key
        self.constraint = constraint
