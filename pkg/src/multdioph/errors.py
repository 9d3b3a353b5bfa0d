"""Exception types shared across the package."""


class MultDiophError(Exception):
    pass


class UndecidablePredicate(MultDiophError):
    """Two certified intervals still overlap at the maximum precision."""


class AmbiguousNearestInteger(UndecidablePredicate):
    """A ball-valued multiple straddles a half-integer."""


class ConditionViolated(MultDiophError, ValueError):
    pass


class HorizonExceeded(MultDiophError, ValueError):
    pass


class IndexOutOfRange(MultDiophError, IndexError):
    pass


class CacheCorrupt(MultDiophError):
    pass
