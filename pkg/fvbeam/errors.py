"""Exception hierarchy shared by the solver modules and the CLI."""

from __future__ import annotations

from typing import Optional


class FvBeamError(Exception):
    """Base class for every error raised by fvbeam."""


class RotationDomainError(FvBeamError, ValueError):
    """A rotation increment reached the tangent-operator singularity (|psi| >= pi)."""

    def __init__(self, magnitude: float):
        self.magnitude = float(magnitude)
        super().__init__(
            f"rotation increment of magnitude {self.magnitude:.6g} rad is outside the "
            "tangent operator domain (< pi); reduce the load step"
        )


class MeshError(FvBeamError, ValueError):
    """Invalid mesh or geometry parameters."""


class MaterialError(FvBeamError, ValueError):
    """Non-positive or non-diagonal constitutive data."""


class SingularPivotError(FvBeamError, ArithmeticError):
    """A 6x6 pivot block of the block-Thomas elimination could not be inverted."""

    def __init__(self, cell_index: int):
        self.cell_index = int(cell_index)
        super().__init__(f"singular pivot block at cell {self.cell_index}")


class BoundarySingularError(FvBeamError, ArithmeticError):
    """The boundary-recovery matrix of an end face is not invertible."""

    def __init__(self, end: str, detail: str = ""):
        self.end = end
        msg = f"boundary recovery matrix at the {end} end is singular"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class UndefinedReferenceError(FvBeamError, ZeroDivisionError):
    """Relative error requested against a zero reference value."""


class ScheduleExhaustedError(FvBeamError):
    """Buckling detection ran the whole schedule without a convergence failure."""

    def __init__(self, last_load: float):
        self.last_load = float(last_load)
        super().__init__(f"schedule exhausted at load factor {self.last_load:.6g} without instability")


class CaseFileError(FvBeamError):
    """Base class for case-file problems."""


class CaseSchemaError(CaseFileError):
    """Case file is not valid JSON or does not match the schema."""

    def __init__(self, message: str, *, path: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = []
        if path:
            where.append(f"field '{path}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class CasePhysicsError(CaseFileError):
    """Case file is well-formed but physically inadmissible."""
