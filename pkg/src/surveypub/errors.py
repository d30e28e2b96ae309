"""Exception types shared across the package."""


class SurveyPubError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SurveyPubError):
    """Invalid configuration value (bad base URI, bad parameter)."""


class IngestError(SurveyPubError):
    """Whole-file ingest failure (missing column, duplicate gazetteer URI)."""


class FacetBuildError(SurveyPubError):
    """Index construction failed (duplicate feature id)."""


class QueryError(SurveyPubError):
    """Malformed query (bad bbox, bad paging, unknown facet value)."""

    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param


class FeedError(SurveyPubError):
    """Feed serialization failure (id not resolvable in the index)."""


class BarrierError(SurveyPubError):
    """Barrier polygon is unusable (open ring, self-intersection)."""


class GridCapError(SurveyPubError):
    """Requested raster exceeds the configured cell cap."""


class QrCapacityError(SurveyPubError):
    """Payload does not fit any supported QR version at the requested level."""


class QrDecodeError(SurveyPubError):
    """QR matrix could not be decoded (structural damage or too many errors)."""


class ExportError(SurveyPubError):
    """Narrative export failure (unresolved block, missing canonical URL)."""
