"""Exception types raised by the sampling core."""

from __future__ import annotations


class SnsError(Exception):
    """Base class for sampler failures.

    ``iteration`` and ``subset`` are attached by the run driver when the
    failure happens inside a chain, so the message pinpoints where the
    target stopped being usable. Both are 1-based.
    """

    def __init__(self, message: str, *, iteration: int | None = None,
                 subset: int | None = None):
        super().__init__(message)
        self.message = message
        self.iteration = iteration
        self.subset = subset

    def __str__(self) -> str:
        context = []
        if self.iteration is not None:
            context.append(f"iteration {self.iteration}")
        if self.subset is not None:
            context.append(f"subset {self.subset}")
        if context:
            return f"{self.message} ({', '.join(context)})"
        return self.message


class NotNegativeDefiniteError(SnsError):
    """Cholesky factorization of a negated Hessian (or a precision matrix)
    hit a non-positive pivot.

    For the sampler this means the target violates the negative-definite
    Hessian requirement at the evaluated point. ``pivot`` is the 1-based
    index of the offending leading minor reported by LAPACK.
    """

    def __init__(self, message: str, *, pivot: int, **kwargs):
        super().__init__(message, **kwargs)
        self.pivot = pivot


class LineSearchFailure(SnsError):
    """Backtracking exhausted its halvings without an acceptable ascent step."""

    def __init__(self, message: str, *, f_old: float, f_last: float, **kwargs):
        super().__init__(message, **kwargs)
        self.f_old = f_old
        self.f_last = f_last
