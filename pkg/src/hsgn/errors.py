"""Typed failure modes shared across the package."""


class CapacityError(RuntimeError):
    """Requested size exceeds what an exact or in-memory method can honor."""


class CacheError(RuntimeError):
    """Coefficient cache file is malformed, truncated, or fails its checksum."""


class CalibrationError(RuntimeError):
    """Calibration file is missing, unreadable, or not a JSON object."""
