"""Exception and warning types shared across the toolkit."""


class RapError(Exception):
    """Base class for all toolkit errors."""


class FormatError(RapError):
    """File container is malformed (bad magic, version, header fields)."""


class TruncatedError(RapError):
    """File payload is shorter than the header promises."""


class DataError(RapError):
    """Array content violates its invariants (non-finite, bad values)."""


class IoError(RapError):
    """Path is unreadable or unwritable."""


class UnsupportedError(RapError):
    """Valid but unsupported input variant (e.g. ASCII PGM)."""


class DimError(RapError):
    """Shape or dimension mismatch between related values."""


class EmptyMaskError(RapError):
    """Mask has no foreground where foreground is required."""


class RankError(RapError):
    """Requested retrieval rank exceeds the database size."""


class ZeroPrototypeError(RapError):
    """Prototype vector has zero norm; cosine map is undefined."""


class EmptyEdgesError(RapError):
    """Edge strength is zero everywhere; no pixels to keep."""


class EmptyGateError(RapError):
    """Gating mask has no pixels; transform search has no candidates."""


class EmptyPremaskError(RapError):
    """Warped support mask landed entirely out of bounds."""


class SeedError(RapError):
    """A Voronoi seed lies outside the mask it should partition."""


class NoPromptError(RapError):
    """Segmenter request carries no positive points."""


class AdapterError(RapError):
    """External segmenter adapter broke the directory contract."""


class ManifestError(RapError):
    """Dataset manifest or config file violates its schema."""


class StageError(RapError):
    """Pipeline stage failure; carries the stage name and the cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class ShortfallWarning(UserWarning):
    """Fewer points available than requested; all of them returned."""


class NoNegativesWarning(UserWarning):
    """No exterior band candidates; negative point list is empty."""
