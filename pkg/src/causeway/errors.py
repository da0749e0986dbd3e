"""Exception hierarchy for the scenario toolchain.

Every error raised on purpose derives from CausewayError so the CLI can map
failures onto its exit codes (validation vs. pipeline) without string matching.
"""


class CausewayError(Exception):
    """Base class for all toolchain errors."""


class ValidationError(CausewayError):
    """Input document or map is structurally invalid."""


class XmlSyntaxError(ValidationError):
    """Not well-formed XML.  Carries line/column when the parser provides them."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class VariantError(ValidationError):
    """Document uses features outside the requested format variant."""


class StructuralError(ValidationError):
    """Scenario tree breaks nesting rules (e.g. seq directly inside seq)."""


class PipelineError(CausewayError):
    """A transformation stage failed on valid input.

    The stage name is kept separate so the CLI can report which stage died.
    """

    stage = "pipeline"

    def __init__(self, message, stage=None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


class InstanceConflictError(PipelineError):
    stage = "extract-instances"


class OverflowCapError(PipelineError):
    """More linearizations than the configured cap.  Carries the exact count."""

    stage = "interleave"

    def __init__(self, message, count, cap):
        super().__init__(message)
        self.count = count
        self.cap = cap


class RuleError(PipelineError):
    """Customization rule file cannot be parsed or references unknown targets."""

    stage = "customize"


class RuleConflictError(RuleError):
    """Protocol and interposition rules hit the same message."""


class EmitError(PipelineError):
    stage = "emit"


class LayoutConsistencyError(EmitError):
    """Layout pass given an XMI text that does not match the document."""

    stage = "layout"


class MscReadError(ValidationError):
    """Text is outside the supported MSC subset."""


class UcmError(ValidationError):
    """Map file is invalid (dangling edges, undeclared variables, bad stubs)."""


class TraversalError(PipelineError):
    stage = "traverse"


class BlockedAlternativeError(TraversalError):
    """No branch guard of an OR-fork evaluates to true."""


class StubSelectionError(TraversalError):
    """No plug-in precondition of a dynamic stub evaluates to true."""


class DeadlockError(TraversalError):
    """An AND-join never received all of its incoming branches."""


class LoopCapError(TraversalError):
    """A node was visited more often than the loop cap allows."""


class PostconditionError(TraversalError):
    """Variable store after traversal contradicts the scenario definition."""
