"""Exception and warning types shared across the library.

The CLI maps these to exit codes: InputError -> 2, NumericError -> 3.
"""


class InputError(ValueError):
    """Caller-supplied data violates a documented precondition."""


class NumericError(RuntimeError):
    """A computation cannot proceed: singular matrix, divergent series,
    violated rank hypothesis, runaway stochastic draw."""


class DegenerateFactorizationWarning(UserWarning):
    """A factorization has lower numerical rank than its inner dimension.

    Emitted instead of failing because empirical Hankel blocks legitimately
    produce rank-deficient factors; pseudo-inverse cutoffs absorb them.
    """
