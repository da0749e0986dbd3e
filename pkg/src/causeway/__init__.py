"""Scenario-to-design transformation toolkit.

Parse use case map scenario documents (or traverse the maps themselves),
make inter-component causality explicit as synthesized messages, then emit
message sequence charts, XMI sequence diagrams and TTCN-3 test skeletons.
"""

from .customize import (
    INTERLEAVE_CAP,
    INTERLEAVE_MODES,
    CustomizationRuleSet,
    apply_rules,
    parse_rules,
    synthesize_interleavings,
)
from .errors import (
    BlockedAlternativeError,
    CausewayError,
    DeadlockError,
    EmitError,
    InstanceConflictError,
    LayoutConsistencyError,
    LoopCapError,
    MscReadError,
    OverflowCapError,
    PipelineError,
    PostconditionError,
    RuleConflictError,
    RuleError,
    StructuralError,
    StubSelectionError,
    TraversalError,
    UcmError,
    ValidationError,
    VariantError,
    XmlSyntaxError,
)
from .model import (
    Condition,
    Do,
    Group,
    Message,
    Par,
    Scenario,
    ScenarioDocument,
    Seq,
    ComponentInstance,
    causal_pairs,
    count_linearizations,
    linearizations,
    validate_document,
)
from .msc import emit_msc, read_msc
from .pipeline import TransformResult, transform_document
from .sd import add_layout_hints, assign_par_labels, emit_xmi
from .synthesis import (
    AnchorSets,
    MappingConfig,
    assign_context_names,
    compute_anchor_sets,
    enrich_document,
    extract_instances,
    synthesize_parallel_messages,
    synthesize_sequential_messages,
)
from .traversal import traverse, traverse_document
from .ttcn import check_ttcn3, emit_ttcn3
from .ucm import parse_ucm
from .xmlio import ENRICHED, PLAIN, parse_scenarios, write_document

__version__ = "0.1.0"

__all__ = [
    "AnchorSets",
    "BlockedAlternativeError",
    "CausewayError",
    "ComponentInstance",
    "Condition",
    "CustomizationRuleSet",
    "DeadlockError",
    "Do",
    "EmitError",
    "ENRICHED",
    "Group",
    "INTERLEAVE_CAP",
    "INTERLEAVE_MODES",
    "InstanceConflictError",
    "LayoutConsistencyError",
    "LoopCapError",
    "MappingConfig",
    "Message",
    "MscReadError",
    "OverflowCapError",
    "PLAIN",
    "Par",
    "PipelineError",
    "PostconditionError",
    "RuleConflictError",
    "RuleError",
    "Scenario",
    "ScenarioDocument",
    "Seq",
    "StructuralError",
    "StubSelectionError",
    "TransformResult",
    "TraversalError",
    "UcmError",
    "ValidationError",
    "VariantError",
    "XmlSyntaxError",
    "add_layout_hints",
    "apply_rules",
    "assign_context_names",
    "assign_par_labels",
    "causal_pairs",
    "check_ttcn3",
    "compute_anchor_sets",
    "count_linearizations",
    "emit_msc",
    "emit_ttcn3",
    "emit_xmi",
    "enrich_document",
    "extract_instances",
    "linearizations",
    "parse_rules",
    "parse_scenarios",
    "parse_ucm",
    "read_msc",
    "synthesize_interleavings",
    "synthesize_parallel_messages",
    "synthesize_sequential_messages",
    "transform_document",
    "traverse",
    "traverse_document",
    "validate_document",
    "write_document",
]
