"""Exception hierarchy shared by all abekit modules."""


class AbeError(Exception):
    """Base class for all toolkit errors."""


class PolicyError(AbeError):
    """Base class for policy language / compilation errors."""


class PolicySyntaxError(PolicyError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ThresholdError(PolicySyntaxError):
    """K-of-N gate with K < 1 or K > N."""


class UnsatisfiablePolicy(PolicyError):
    """The compiled access tree reduces to constant FALSE."""


class PolicyNotSatisfied(AbeError):
    """A key's attributes do not satisfy the relevant access tree."""


class UnknownAttribute(AbeError):
    """KP-ABE attribute used before being registered in the universe."""


class DeserializationError(AbeError):
    """Malformed or corrupted serialized key material / ciphertext."""


class AuthenticationFailure(AbeError):
    """Container failed authenticated decryption (tampering detected)."""
