"""Exception hierarchy shared across the toolkit."""


class CompdistError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(CompdistError, ValueError):
    """Malformed input: wrong sizes, out-of-range indices, wrong graph shape."""


class InvalidFlipError(CompdistError, ValueError):
    pass


class InitializationError(CompdistError, RuntimeError):
    """Random initial districting could not be built within the retry budget."""


class UndefinedCompetitivenessError(CompdistError, ZeroDivisionError):
    """Competitiveness of a district with zero population was requested."""


class BudgetExceededError(CompdistError, RuntimeError):
    """An exact solver refused to run because the instance exceeds its work budget."""

    def __init__(self, message, budget_name, limit, requested=None):
        super().__init__(message)
        self.budget_name = budget_name
        self.limit = limit
        self.requested = requested


class DegenerateInstanceError(CompdistError, ValueError):
    pass


class ReductionMismatchError(CompdistError, AssertionError):
    """The districting side and the Subset Sum side of a round trip disagree."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GraphFormatError(CompdistError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DanglingEdgeError(GraphFormatError):
    def __init__(self, node_id, path=None, line=None):
        super().__init__(f"edge references unknown node id {node_id!r}", path, line)
        self.node_id = node_id
