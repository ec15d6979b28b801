"""Exception types raised across the package."""


class QuasidualError(Exception):
    """Base class for all package errors."""


class NonConvergence(QuasidualError, RuntimeError):
    """Newton inversion of the transform exceeded its iteration budget."""


class InvalidSpec(QuasidualError, ValueError):
    """A problem specification violates one of the standing hypotheses.

    Attributes
    ----------
    hypothesis : str
        Short name of the violated hypothesis (``"gamma"``, ``"p"``, ...).
    """

    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class NonPositiveField(QuasidualError, ValueError):
    """A field that must be strictly positive on interior nodes is not."""


class NonPositiveT(QuasidualError, ValueError):
    """A fiber parameter t <= 0 was supplied."""


class NoInteriorMinimum(QuasidualError, RuntimeError):
    """The fiber-map scan minimum sits on the edge of the scan range."""


class NoCompatibility(QuasidualError, RuntimeError):
    """The compatibility integral diverges, so no H^1_0 solution exists."""

    def __init__(self, report):
        super().__init__(
            f"compatibility integral classified {report.classification} "
            f"(last ratios {', '.join(f'{r:.4f}' for r in report.ratios[-2:])})"
        )
        self.report = report
