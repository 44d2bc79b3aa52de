"""Exception and warning types raised across the package."""


class ParseError(ValueError):
    """Malformed mesh file. ``line`` is the 1-based offending line, if known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(ValueError):
    """Mesh is not a single oriented manifold disk.

    ``kind`` names the defect, ``element`` the offending vertex, edge or face.
    """

    def __init__(self, message, kind=None, element=None):
        self.kind = kind
        self.element = element
        super().__init__(message)


class IoError(OSError):
    """Writing an output stream failed."""


class DegenerateFaceError(ValueError):
    """A source face has zero area, so its cotangents are undefined."""

    def __init__(self, message, faces=()):
        self.faces = list(faces)
        super().__init__(message)


class SingularInteriorError(RuntimeError):
    """The interior block of the Laplacian could not be factorized."""

    def __init__(self, message, condition_estimate=float("inf")):
        self.condition_estimate = condition_estimate
        super().__init__(message)


class EscalationOverflow(RuntimeError):
    """Penalty weight escalation exceeded its ceiling without passing the gates."""


class RepairStall(RuntimeError):
    """An unfolding loop hit its pass cap with foldings remaining.

    ``report`` holds the last :class:`~sdmce.unfolding.FoldingReport` and
    ``embedding`` the best configuration reached.
    """

    def __init__(self, message, report=None, embedding=None):
        self.report = report
        self.embedding = embedding
        super().__init__(message)


class SingularUpdateError(RuntimeError):
    """The 3x3 coupled update of a folded interior triangle is singular."""


class DegenerateImageFace(UserWarning):
    """An image triangle has zero area; its corners are excluded from angle stats."""


class ConformalPole(UserWarning):
    """A face map has vanishing holomorphic derivative; its |mu| is reported as inf."""
