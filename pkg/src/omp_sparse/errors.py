"""Exception types raised by the library."""


class OmpSparseError(Exception):
    """Base class for all library errors."""


class ZeroColumn(OmpSparseError, ValueError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"column {index} has (numerically) zero norm")


class BudgetExceeded(OmpSparseError):
    """The number of subsets to enumerate exceeds the allowed budget."""

    def __init__(self, required, budget):
        self.required = required
        self.budget = budget
        super().__init__(
            f"exact enumeration needs {required} subsets, budget is {budget}")


class RankDeficient(OmpSparseError, ValueError):
    def __init__(self, support):
        self.support = tuple(int(i) for i in support)
        super().__init__(f"columns {list(self.support)} are numerically dependent")


class AllSelected(OmpSparseError):
    """Every column has already been selected."""


class OrthogonalityViolated(OmpSparseError, ArithmeticError):
    """The residual correlates with an already selected column.

    This means the least-squares refit lost accuracy; it never happens in
    exact arithmetic.
    """

    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(
            f"argmax index {index} already selected (|correlation| = {value:.3e})")


class DegenerateDenominator(OmpSparseError, ValueError):
    """The guarantee's denominator gap is not positive, so it is vacuous."""

    def __init__(self, gap):
        self.gap = float(gap)
        super().__init__(f"denominator gap {gap!r} is not positive")
