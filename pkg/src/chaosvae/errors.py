"""Exception hierarchy.

Errors split into two families so the command line can map them to exit
codes: :class:`InputError` (bad data, bad config, bad seed; exit 2) and
:class:`NumericalError` (divergence during training; exit 3).
"""


class ChaosVaeError(Exception):
    pass


class InputError(ChaosVaeError, ValueError):
    pass


class NumericalError(ChaosVaeError, ArithmeticError):
    pass


# chaos
class DegenerateOrbit(NumericalError):
    pass


class RejectedSeed(InputError):
    pass


class SeedExhausted(InputError):
    pass


class EmptySample(InputError):
    pass


# nn / vae
class ShapeMismatch(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class StaleCache(ChaosVaeError, RuntimeError):
    pass


class NonFiniteLoss(NumericalError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


# occ
class MissingTrainScores(InputError):
    pass


class InvalidPercentile(InputError):
    pass


class EmptyTestSet(InputError):
    pass


# data
class DataError(InputError):
    """Malformed CSV content or schema; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownColumn(DataError):
    pass


class EmptyTraining(DataError):
    pass


class MissingClass(DataError):
    pass


# stats
class TooFewRuns(InputError):
    pass


class ZeroVariance(NumericalError):
    pass
