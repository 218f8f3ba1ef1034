"""Exception types shared across the package."""


class DeskDriveError(Exception):
    """Base class for all package errors."""


class TrajectoryTooShort(DeskDriveError):
    pass


class HistoryLengthMismatch(DeskDriveError):
    pass


class LengthMismatch(DeskDriveError):
    pass


class TooFewTrajectories(DeskDriveError):
    pass


class KOutOfRange(DeskDriveError):
    pass


class ShapeMismatch(DeskDriveError):
    pass


class NonFiniteValue(DeskDriveError):
    pass


class InvalidSteps(DeskDriveError):
    pass


class TooFewCandidates(DeskDriveError):
    pass


class EmptyPairs(DeskDriveError):
    pass


class MissingPrerequisite(DeskDriveError):
    pass


class IOFailure(DeskDriveError):
    pass
