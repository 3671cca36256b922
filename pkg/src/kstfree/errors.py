"""Exception types shared across the package."""

import os


class KstError(Exception):
    """Base class for every error raised by kstfree."""


class NonPrimeCharacteristic(KstError, ValueError):
    pass


class ReducibleModulus(KstError, ValueError):
    pass


class DivisionByZero(KstError, ZeroDivisionError):
    pass


class CapExceeded(KstError, RuntimeError):
    pass


class IndexOutOfRange(KstError, IndexError):
    pass


class MixedSides(KstError, ValueError):
    pass


class StaleReport(KstError, ValueError):
    pass


class DuplicateNode(KstError, ValueError):
    pass


class PreconditionFailed(KstError, ValueError):
    pass


DEFAULT_WORK_CAP = 2**26
WORK_CAP_ENV = "KSTFREE_WORK_CAP"


def work_cap(override=None):
    """Resolve the work cap: explicit override, then environment, then default."""
    if override is not None:
        return int(override)
    env = os.environ.get(WORK_CAP_ENV)
    if env:
        return int(env)
    return DEFAULT_WORK_CAP


def check_work(amount, cap, what):
    cap = work_cap(cap)
    if amount > cap:
        raise CapExceeded(f"{what} needs {amount} units of work, cap is {cap}")
