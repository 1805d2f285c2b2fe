"""Exception hierarchy shared across the engine, CLI, and HTTP service.

Every error carries a stable machine-readable ``code`` so the service
layer can map exceptions to API error envelopes deterministically.
"""

from __future__ import annotations


class SageKBError(Exception):
    """Base class for all engine errors."""

    code = "internal_error"

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.message = message
        self.stage = stage


class InvalidRequestError(SageKBError):
    code = "invalid_request"


class DuplicateNameError(SageKBError):
    code = "duplicate_name"


class KBNotFoundError(SageKBError):
    code = "kb_not_found"


class CorruptedStoreError(SageKBError):
    code = "corrupted_store"


class StorageError(SageKBError):
    code = "storage_failure"


class UnsupportedFormatError(SageKBError):
    code = "unsupported_format"


class ParseError(SageKBError):
    code = "parse_failure"


class EmptyExtractionError(ParseError):
    code = "empty_extraction"


class DimensionMismatchError(SageKBError):
    code = "dimension_mismatch"


class DanglingProvenanceError(SageKBError):
    code = "dangling_provenance"


class ProviderError(SageKBError):
    """A provider call failed in a way that is not a transport problem."""

    code = "provider_unavailable"


class TransportError(ProviderError):
    """Network-level failure after the retry budget was exhausted."""

    code = "provider_transport"


class ProviderTimeoutError(TransportError):
    code = "provider_timeout"


class ProviderRefusalError(ProviderError):
    """The provider refused to answer (content filter etc.), distinguishable
    from an empty or failed response."""

    code = "provider_refusal"


class FetchFailureError(ProviderError):
    """Non-2xx HTTP response while scraping a page."""

    code = "fetch_failure"


class NonTextContentError(ProviderError):
    """Fetched resource is not textual (wrong content type)."""

    code = "non_text_content"


class UnsupportedProviderError(ProviderError):
    """No provider is configured for the requested capability."""

    code = "provider_unsupported"


class JudgeParseError(SageKBError):
    code = "judge_parse"


class ScoreOutOfRangeError(JudgeParseError):
    code = "score_out_of_range"


class ZeroStatementsError(SageKBError):
    code = "zero_statements"


class ZeroConceptsError(SageKBError):
    code = "zero_concepts"


class AllSearchesFailedError(SageKBError):
    code = "all_searches_failed"


class ReportJobError(SageKBError):
    """A report pipeline stage failed; ``stage`` names the failing stage."""

    code = "report_job_failed"


class JobNotFoundError(SageKBError):
    code = "job_not_found"


class ReportNotFoundError(SageKBError):
    code = "report_not_found"


class EvalSuiteError(SageKBError):
    code = "eval_suite_failed"


class DatasetError(SageKBError):
    code = "dataset_invalid"
