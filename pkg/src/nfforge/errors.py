"""Exception taxonomy shared across the package."""


class NfforgeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NfforgeError):
    """Invalid or incomplete run configuration (unknown key, missing seed, ...)."""


class InfeasibleLayoutError(NfforgeError):
    """Scene parameters admit no non-overlapping building placement."""


class ModeInfeasibleError(NfforgeError):
    """A trajectory mode cannot start in the given scene (e.g. WallHug with no buildings)."""


class UnknownMaterialError(NfforgeError):
    """Material name not present in the material table."""


class NoPathsError(NfforgeError):
    """An operation requiring at least one propagation path received none."""


class DegenerateChannelError(NfforgeError):
    """All-zero channel vector: beam labels are undefined for this frame."""


class UndefinedReferenceError(NfforgeError):
    """Normalized gain requested against a reference codeword with zero response."""


class ShapeMismatchError(NfforgeError):
    """Array shapes inconsistent across frames or with the declared header."""


class FormatVersionError(NfforgeError):
    """Dataset format version not supported by this reader."""


class ChecksumError(NfforgeError):
    """Stored digest does not match file contents."""


class DanglingReferenceError(NfforgeError):
    """Manifest references a file that does not exist."""


class IntegrityError(NfforgeError):
    """Recomputed dataset statistics disagree with the manifest."""
