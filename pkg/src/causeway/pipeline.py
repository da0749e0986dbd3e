"""End-to-end transformation: plain scenario document to one output format."""

from __future__ import annotations

from dataclasses import dataclass

from . import customize, model, msc, sd, ttcn
from .customize import INTERLEAVE_CAP, CustomizationRuleSet
from .synthesis import MappingConfig, enrich_document

FORMATS = ("msc", "xmi", "ttcn3")
_SUFFIX = {"msc": ".msc", "xmi": ".xmi", "ttcn3": ".ttcn"}


@dataclass(frozen=True)
class TransformResult:
    document: model.ScenarioDocument  # enriched, customized, interleaved
    output: str
    suffix: str


def transform_document(
    doc: model.ScenarioDocument,
    format: str = "msc",
    config: MappingConfig = MappingConfig(),
    rules: CustomizationRuleSet = None,
    interleave: str = "keep-par",
    cap: int = INTERLEAVE_CAP,
    layout: str = "generic",
    show_waiting_places: bool = True,
) -> TransformResult:
    """Enrich, customize, interleave, then emit the chosen format.

    The input must be a plain document; the returned document is the final
    enriched intermediate the emitter saw.  Note that ttcn3 requires
    sequential scenarios, so par-bearing documents need interleave single
    or all.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    model.validate_document(doc, variant="plain")
    enriched = enrich_document(doc, config)
    if rules is not None:
        enriched = customize.apply_rules(enriched, rules)
    final = customize.synthesize_interleavings(enriched, interleave, cap)
    final = sd.assign_par_labels(final)
    if format == "msc":
        output = msc.emit_msc(final, config, show_waiting_places)
    elif format == "xmi":
        output = sd.emit_xmi(final, config)
        if layout == "generic":
            output = sd.add_layout_hints(output, final, config)
    else:
        output = ttcn.emit_ttcn3(final)
    return TransformResult(document=final, output=output, suffix=_SUFFIX[format])
