"""Error types raised across walkops.

Every message starts with an upper-case code (``ORDINATE_RANGE: ...``) so the
CLI and the tests can match on it without caring about the class.
"""

from typing import Any, Dict, Optional


class WalkopsError(Exception):
    code = "WALKOPS"

    def __init__(self, detail: str) -> None:
        super().__init__(f"{self.code}: {detail}")
        self.detail = detail


class OrdinateRangeError(WalkopsError, OverflowError):
    code = "ORDINATE_RANGE"


class EnvironmentSpecError(WalkopsError, ValueError):
    code = "ENV_SPEC"


class DecompositionError(WalkopsError, ValueError):
    code = "MALFORMED_DECOMPOSITION"


class NotAvailableError(WalkopsError, LookupError):
    code = "NOT_AVAILABLE"


class DomainError(WalkopsError, ValueError):
    code = "DOMAIN"


class InsufficientDataError(WalkopsError, ValueError):
    code = "INSUFFICIENT_DATA"


class ConfigError(WalkopsError, ValueError):
    code = "CONFIG"


class QuadratureError(WalkopsError, ArithmeticError):
    code = "QUADRATURE_FAILED"

    def __init__(self, detail: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(detail)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})
