"""Exception hierarchy shared by all qvn modules."""


class QvnError(Exception):
    """Base class for every error raised by this package."""


class ParseError(QvnError):
    pass


class ValidationError(QvnError):
    pass


class ShuttleError(QvnError):
    pass


class Obstructed(ShuttleError):
    def __init__(self, track, index):
        super().__init__(f"track {track} obstructed at index {index}")
        self.track = track
        self.index = index


class OutOfRange(ShuttleError):
    pass


class MismatchedDisplacement(ShuttleError):
    pass


class SpacingViolation(ShuttleError):
    pass


class CellEmpty(ShuttleError):
    pass


class CellNotOnStaticSet(ShuttleError):
    pass


class InvalidArm(ShuttleError):
    pass


class InfeasibleCollection(QvnError):
    pass


class CapacityExceeded(QvnError):
    pass


class DeadlockDetected(QvnError):
    pass


class SingularPoint(QvnError):
    pass


class EmptyResult(QvnError):
    pass
