"""OpenTelemetry setup for the eigstab command line tools.

Solver steps and driver cases are recorded as spans. Spans can be logged to the
console (handy to see where a run spends its time) and exported over OTLP/HTTP
together with log records when a collector endpoint is configured.
"""

import logging
from collections.abc import Sequence
from importlib.metadata import PackageNotFoundError, version

from opentelemetry import trace
from opentelemetry._logs import set_logger_provider
from opentelemetry.exporter.otlp.proto.http._log_exporter import OTLPLogExporter
from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter
from opentelemetry.instrumentation.logging.handler import LoggingHandler
from opentelemetry.sdk._logs import LoggerProvider
from opentelemetry.sdk._logs.export import BatchLogRecordProcessor
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import ReadableSpan, TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, SimpleSpanProcessor, SpanExporter, SpanExportResult

SERVICE_NAME = "eigstab"

logger = logging.getLogger(__name__)


def _service_version() -> str:
    try:
        return version("eigstab-shared")
    except PackageNotFoundError:
        return "0.0.0"


def _resource(service_name: str) -> Resource:
    return Resource.create({"service.name": service_name, "service.version": _service_version()})


class SimpleConsoleSpanExporter(SpanExporter):
    """Span exporter that writes one log line per finished span."""

    def export(self, spans: Sequence[ReadableSpan]) -> SpanExportResult:  # noqa: PLR6301
        """Log span name, duration and attributes."""
        for span in spans:
            if span.end_time is not None and span.start_time is not None:
                duration_ms = (span.end_time - span.start_time) / 1e6
            else:
                duration_ms = 0.0
            if span.attributes:
                attrs = " ".join(f"{k}={v}" for k, v in sorted(span.attributes.items()))
                logger.info("span %s %.3fms %s", span.name, duration_ms, attrs)
            else:
                logger.info("span %s %.3fms", span.name, duration_ms)
        return SpanExportResult.SUCCESS

    def shutdown(self) -> None:
        """Shutdown the exporter."""

    def force_flush(self, _timeout_millis: int = 30000) -> bool:  # noqa: PLR6301
        """Nothing is buffered."""
        return True


def initialize_tracing(
    service_name: str = SERVICE_NAME,
    otlp_endpoint: str | None = None,
    log_console_spans: bool = False,
) -> tuple[TracerProvider, trace.Tracer]:
    """Install a global tracer provider with console and optional OTLP exporters.

    Args:
        service_name: The service name attached to all spans.
        otlp_endpoint: Optional OTLP/HTTP collector base URL (e.g. http://localhost:4318).
        log_console_spans: Whether finished spans are written to the log.

    Returns:
        Tuple of (TracerProvider, Tracer).
    """
    tracer_provider = TracerProvider(resource=_resource(service_name))

    if log_console_spans:
        tracer_provider.add_span_processor(SimpleSpanProcessor(SimpleConsoleSpanExporter()))

    if otlp_endpoint:
        try:
            otlp_exporter = OTLPSpanExporter(endpoint=f"{otlp_endpoint}/v1/traces")
            tracer_provider.add_span_processor(BatchSpanProcessor(otlp_exporter))
            logger.info("OTLP span exporter configured: %s", otlp_endpoint)
        except (ValueError, OSError) as e:
            logger.warning("Failed to configure OTLP span exporter: %s", e)

    trace.set_tracer_provider(tracer_provider)
    tracer = trace.get_tracer(__name__)

    logger.debug("tracing initialized (console=%s, otlp=%s)", log_console_spans, bool(otlp_endpoint))
    return tracer_provider, tracer


def initialize_logging(
    service_name: str = SERVICE_NAME,
    otlp_endpoint: str | None = None,
    otlp_log_level: int = logging.INFO,
) -> LoggerProvider:
    """Attach an OTLP log handler to the root logger when an endpoint is given.

    Args:
        service_name: The service name attached to log records.
        otlp_endpoint: Optional OTLP/HTTP collector base URL.
        otlp_log_level: Minimum level of records shipped to the collector.

    Returns:
        The logger provider (without processors if no endpoint is set).
    """
    logger_provider = LoggerProvider(resource=_resource(service_name))

    if otlp_endpoint:
        try:
            otlp_log_exporter = OTLPLogExporter(endpoint=f"{otlp_endpoint}/v1/logs")
            logger_provider.add_log_record_processor(BatchLogRecordProcessor(otlp_log_exporter))
            set_logger_provider(logger_provider)
            logging.getLogger().addHandler(LoggingHandler(level=otlp_log_level, logger_provider=logger_provider))
            # keep the exporter's own HTTP chatter out of the exported stream
            logging.getLogger("opentelemetry").setLevel(logging.WARNING)
            logging.getLogger("urllib3").setLevel(logging.WARNING)
            logger.info("OTLP log exporter configured: %s", otlp_endpoint)
        except (ValueError, OSError) as e:  # pragma: no cover
            logger.warning("Failed to configure OTLP log exporter: %s", e)

    return logger_provider
