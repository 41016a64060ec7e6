"""Exception types shared across the package."""
from __future__ import annotations


class HomoflowError(Exception):
    """Base class for every error raised by homoflow."""

    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class MalformedStructure(HomoflowError):
    code = "malformed_structure"


class DomainError(HomoflowError):
    code = "domain_error"


class EmbeddingError(HomoflowError):
    code = "embedding_error"


class Unsupported(HomoflowError):
    code = "unsupported"


class ConfigError(HomoflowError):
    code = "config_error"


class NotAnEquivalence(HomoflowError):
    code = "not_an_equivalence"


class BoundExceeded(HomoflowError):
    code = "bound_exceeded"


class SignatureError(HomoflowError):
    code = "signature_error"


class NotACongruence(HomoflowError):
    code = "not_a_congruence"


class IncompleteMeasure(HomoflowError):
    code = "incomplete_measure"


class WitnessMismatch(HomoflowError):
    code = "witness_mismatch"


class ParamError(HomoflowError):
    code = "param_error"


class NotFound(HomoflowError):
    code = "not_found"


class StepError(HomoflowError):
    code = "step_error"

    def __init__(self, index: int, message: str):
        super().__init__(f"step {index}: {message}")
        self.index = index

    def to_json(self) -> dict:
        out = super().to_json()
        out["index"] = self.index
        return out
