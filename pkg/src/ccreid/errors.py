"""Error taxonomy shared across the package.

ValidationError covers bad inputs that a caller could have checked
(malformed manifests, out-of-range labels, shape mismatches).  Everything
else surfaces as the usual built-in exceptions (OSError, RuntimeError).
The CLI maps ValidationError to exit code 2 and other failures to 3.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class ManifestError(ValidationError):
    """Manifest file is malformed or inconsistent."""
