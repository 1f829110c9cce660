"""Exception types shared by all modules."""


class PcspError(Exception):
    """Base class for every error raised by the package."""


class ParseError(PcspError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.message = message


class CapacityError(PcspError):
    """A construction would exceed the configured size cap."""

    def __init__(self, what, count, cap):
        self.what = what
        self.count = count
        self.cap = cap
        super().__init__(f"{what}: {count} exceeds size cap {cap}")


class BudgetExceeded(PcspError):
    """A search ran out of its node budget before reaching an answer."""

    def __init__(self, nodes, budget):
        self.nodes = nodes
        self.budget = budget
        super().__init__(f"search budget exhausted after {nodes} nodes (budget {budget})")


class SignatureMismatch(PcspError):
    pass


class DomainMismatch(PcspError):
    pass
