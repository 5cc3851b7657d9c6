"""Typed errors shared by all modules.

Every error carries a short machine-readable ``name`` (used by the CLI on
stderr) and an ``exit_code``: 2 for invalid input, 3 for numerical failure.
"""


class BilliardError(Exception):
    name = "billiard-error"
    exit_code = 3

    def __str__(self):
        base = super().__str__()
        return f"{self.name}: {base}" if base else self.name


class InvalidSpecError(BilliardError):
    name = "invalid-spec"
    exit_code = 2


class DegenerateChordError(BilliardError):
    name = "degenerate-chord"
    exit_code = 2


class TangentialChordError(BilliardError):
    name = "tangential-chord"
    exit_code = 2


class CornerChordError(BilliardError):
    name = "corner-chord"
    exit_code = 2


class TangentialHitError(BilliardError):
    name = "tangential-hit"


class CornerHitError(BilliardError):
    name = "corner-hit"


class NoIntersectionError(BilliardError):
    name = "no-intersection"


class FlatEndpointError(BilliardError):
    name = "flat-endpoint"
    exit_code = 2


class DegenerateStringError(BilliardError):
    name = "degenerate-string"
    exit_code = 2


class PoleAtSampleError(BilliardError):
    name = "pole-at-sample"


class WallExitError(BilliardError):
    name = "wall-exit"


class CurvatureConsistencyError(BilliardError):
    name = "curvature-consistency"


class NoOrbitFoundError(BilliardError):
    name = "no-orbit-found"
