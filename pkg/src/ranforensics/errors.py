"""Exception hierarchy shared by every stage of the toolkit."""


class ForensicsError(Exception):
    """Base class; the CLI turns any of these into a one-line stderr record."""

    module = "ranforensics"


class IngestError(ForensicsError):
    module = "ingest"


class ManifestError(IngestError):
    pass


class FlowReportError(IngestError):
    pass


class EmptyFlowReport(FlowReportError):
    """Valid JSON that carries neither an end summary nor intervals."""


class KpiError(ForensicsError):
    module = "kpi"


class FitError(ForensicsError):
    module = "fit"


class DiagnoseError(ForensicsError):
    module = "diagnose"


class AdvisorError(ForensicsError):
    module = "advisor"


class SynthError(ForensicsError):
    module = "synth"


class ReportError(ForensicsError):
    module = "report"
