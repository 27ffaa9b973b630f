"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class CtxBankError(Exception):
    """Base class for all toolkit errors."""


# bank state machine


class BankError(CtxBankError):
    pass


class UnknownTarget(BankError):
    """Decision targets an entry that does not exist or is retracted."""


class TypeMismatch(BankError):
    """Decision or evidence crosses memory types."""


class MalformedDecision(BankError):
    """Decision is missing fields its kind requires, or carries forbidden ones."""


class UnknownRequestedId(BankError):
    """Hybrid view requested for an entry that is not active."""


# media store


class MediaError(CtxBankError):
    pass


class UnknownClip(MediaError):
    pass


class FrameOutOfRange(MediaError):
    pass


class SchemaVersionMismatch(CtxBankError):
    pass


# model gateway


class GatewayError(CtxBankError):
    pass


class TransportError(GatewayError):
    """Retryable failure talking to a remote model service."""


class BudgetExceeded(GatewayError):
    pass


class NoScriptEntry(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no transcript entry for prompt {key}")
        self.key = key


class ParseFailure(GatewayError):
    """Model output did not contain the expected structured content."""

    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


class DegenerateBox(ParseFailure):
    pass


# evaluation


class EvalError(CtxBankError):
    pass


class MissingClass(EvalError):
    pass


class EmptySet(EvalError):
    pass


class EmptyLog(EvalError):
    pass


class SchemaError(EvalError):
    def __init__(self, instance_id: str | None, path: str, message: str):
        where = f"{instance_id}: " if instance_id else ""
        super().__init__(f"{where}{path}: {message}")
        self.instance_id = instance_id
        self.path = path


class TemplateError(CtxBankError):
    pass


class ConstructionError(CtxBankError):
    """Stage-I bank construction failed for one or more context items."""

    def __init__(self, failures: dict[str, Exception]):
        detail = "; ".join(f"{k}: {v}" for k, v in failures.items())
        super().__init__(f"bank construction failed for {len(failures)} item(s): {detail}")
        self.failures = failures
