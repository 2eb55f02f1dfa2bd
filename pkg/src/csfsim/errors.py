"""Exception types shared across the package."""


class CSFError(Exception):
    """Base class for all package errors."""


class SingularState(CSFError):
    """A model denominator fell below the configured floor."""

    def __init__(self, t, which, node, value):
        self.t = t
        self.which = which
        self.node = node
        self.value = value
        super().__init__(
            f"singular state at t={t:.6g}: |{which}|={abs(value):.3g} at node {node}"
        )


class BlowUpCrossed(CSFError):
    """The closed-form Riccati pressure passed its blow-up time."""

    def __init__(self, t, node=None):
        self.t = t
        self.node = node
        where = "" if node is None else f" at node {node}"
        super().__init__(f"Riccati denominator vanished before t={t:.6g}{where}")


class InvalidParams(CSFError, ValueError):
    pass


class QuadratureFailure(CSFError):
    pass


class StepSizeUnderflow(CSFError):
    pass


class NoContraction(CSFError):
    """Successive-approximation differences stopped shrinking."""

    def __init__(self, history, reason=None):
        self.history = history
        self.reason = reason
        msg = (f"no contraction after {len(history)} iterations "
               f"(last ratios: {[r.ratio for r in history[-3:]]})")
        if reason:
            msg += f"; {reason}"
        super().__init__(msg)


class ConfigError(CSFError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ExprSyntaxError(CSFError, ValueError):
    def __init__(self, source, offset, expected):
        self.source = source
        self.offset = offset
        self.expected = expected
        super().__init__(f"at offset {offset}: expected {expected} in {source!r}")
