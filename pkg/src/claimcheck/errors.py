"""Exception hierarchy shared across the package."""


class ClaimCheckError(Exception):
    """Base class for all package errors."""


class ParseError(ClaimCheckError):
    """A file could not be parsed; carries path and 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DataValidationError(ClaimCheckError):
    """Input data violates a schema invariant."""


class AssemblyError(ClaimCheckError):
    """A claim/document pair cannot be turned into a model input."""


class RerankError(ClaimCheckError):
    """A pair scorer failed; carries the (claim_id, doc_id) pair."""

    def __init__(self, claim_id, doc_id, cause):
        super().__init__(f"scorer failed on claim {claim_id}, doc {doc_id}: {cause}")
        self.claim_id = claim_id
        self.doc_id = doc_id


class PredictionError(ClaimCheckError):
    """One or more documents failed during batch prediction."""

    def __init__(self, claim_id, failures):
        lines = "; ".join(f"doc {doc_id}: {msg}" for doc_id, msg in failures)
        super().__init__(f"prediction failed for claim {claim_id}: {lines}")
        self.claim_id = claim_id
        self.failures = failures


class CheckpointError(ClaimCheckError):
    """A model checkpoint is missing, corrupt, or version-incompatible."""


class ConfigError(ClaimCheckError):
    """A training config file is malformed or inconsistent."""
