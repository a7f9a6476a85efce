"""Exception and warning types raised across couponlab."""


class CouponLabError(Exception):
    pass


class InvalidParameterError(CouponLabError, ValueError):
    """Arguments outside the domain of an operation."""


class StateCollapseError(InvalidParameterError):
    """The missing-arc reduction of the arcs chain needs ``s >= n // 2``."""


class InfiniteExpectationError(CouponLabError, ValueError):
    """Some coupon never appears in the support, so collection never completes."""


class BudgetExceededError(CouponLabError, RuntimeError):
    """The requested computation exceeds the configured size or work cap."""


class TruncationWarning(UserWarning):
    """A tail sum was cut off before its error bound met the tolerance."""
