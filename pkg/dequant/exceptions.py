class DequantError(Exception):
    """Base class for every error raised by the dequant app."""


class CircuitSyntaxError(DequantError, ValueError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class TruthTableError(DequantError, ValueError):
    pass


class UnresolvedOracleError(DequantError, ValueError):
    pass


class ResourceLimitError(DequantError):
    """A representation would exceed a configured resource cap."""


class InvalidFunctionError(DequantError, ValueError):
    """The function breaks the constant-or-balanced promise or is not separable."""


class NonCliffordGateError(DequantError, ValueError):
    pass


class UnsupportedCircuitError(DequantError, ValueError):
    """The selected backend cannot interpret this circuit."""


class CapExceeded(DequantError):
    """A gate would merge entanglement blocks beyond the block cap."""

    def __init__(self, gate_index, size, cap):
        self.gate_index = gate_index
        self.size = size
        self.cap = cap
        super().__init__(f"gate {gate_index} needs a {size}-qubit block, cap is {cap}")


class BackendFailure(DequantError):
    """A backend reported a structured failure (cap exceeded, unsupported shape...)."""

    def __init__(self, reason, detail=''):
        self.reason = reason
        self.detail = detail
        label = getattr(reason, 'value', reason)
        super().__init__(f"{label}: {detail}" if detail else label)
