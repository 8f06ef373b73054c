"""Exception hierarchy shared by every liplab module."""


class LiplabError(Exception):
    """Base class for all errors raised by liplab."""


class InputError(LiplabError, ValueError):
    """An argument violates an operation's precondition."""


class SizeError(LiplabError):
    """The instance is too large to enumerate exhaustively."""


class BudgetExceeded(LiplabError):
    """A query ledger ran out of budget."""


class PromiseViolation(LiplabError):
    """A (delta, gamma) distribution query was issued on a profile with a support
    probability below gamma."""


class ContractError(LiplabError):
    """An internal contract was broken (e.g. an adversary left its delta envelope)."""


class PreconditionError(LiplabError):
    """A mathematical precondition of an operation does not hold."""


class LPInfeasible(LiplabError):
    """The linear program has no feasible point."""
