"""Exception hierarchy shared by every stage of the lab."""


class LabError(Exception):
    """Base class for all errors raised by pas_npn_lab."""


class ShapingError(LabError):
    """Distribution matcher construction or coding failure."""


class EmptySupportError(ShapingError):
    """No amplitude sequence satisfies the requested energy constraint."""


class CapacityError(ShapingError):
    """The DM constraint admits fewer than 2^k sequences."""


class DecodeError(ShapingError):
    """A block is outside the support of the matcher (corrupted input)."""


class OutOfImageError(DecodeError):
    """A block has the right composition but no input word maps to it."""


class FrameShapeError(LabError):
    """Amplitude blocks or signs do not fit the requested symbol frame geometry."""


class ChannelConfigError(LabError):
    """Invalid waveform, filter, WDM grid or link configuration."""


class CprError(LabError):
    """Carrier phase recovery failure."""


class UndefinedPhaseError(CprError):
    """The phase of a zero-energy correlation is undefined."""


class MetricsError(LabError):
    """Metric evaluation failure."""


class UnsupportedLinkError(MetricsError):
    """The analytic kernel only covers links made of identical spans."""


class KernelAccuracyError(MetricsError):
    """Kernel quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class SeriesTooShortError(MetricsError):
    """Not enough interior samples to evaluate a statistic."""


class UndefinedCorrelationError(MetricsError):
    """Correlation of a constant (zero-variance) series."""


class StageError(LabError):
    """Failure inside one stage of an experiment point, tagged with that stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
