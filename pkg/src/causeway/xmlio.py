"""Read and write scenario documents in the two XML dialects.

"plain" is the traced-scenario input format; "enriched" extends it with an
instance list and message elements and accepts every plain document.  The
writer is canonical: fixed attribute order, two-space indent, LF endings,
UTF-8 with declaration.  parse(write(doc)) is structural identity and
write(parse(text)) is a byte-level fixed point, which the golden tests rely
on.

Validation is structural rather than DTD-driven so error messages can name
the offending element and attribute.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional

from . import model
from .errors import ValidationError, VariantError, XmlSyntaxError

PLAIN = "plain"
ENRICHED = "enriched"

# Attribute order is the serialization contract: it follows the declaration
# order of the document type, required attributes first writing even when
# empty, optional ones omitted when absent.
_ATTRS = {
    "scenarios": ("date", "ucm-file", "design-name", "ucm-design-version"),
    "instance": ("instance-id", "name", "role"),
    "group": ("group-id", "name", "description"),
    "scenario": ("scenario-definition-id", "name", "description"),
    "do": (
        "hyperedge-id",
        "name",
        "type",
        "description",
        "component-name",
        "component-role",
        "component-id",
    ),
    "condition": ("hyperedge-id", "label", "expression"),
    "message": (
        "id",
        "name",
        "source-id",
        "destination-id",
        "is-task",
        "is-timer",
        "timer-property",
        "last-ref",
        "description",
        "para-label",
        "is-connector",
        "connector-type",
    ),
    "instances": (),
    "seq": (),
    "par": (),
}

_REQUIRED = {
    "scenarios": ("date", "ucm-file", "ucm-design-version"),
    "instance": ("instance-id", "name"),
    "group": ("name",),
    "scenario": ("name",),
    "do": ("hyperedge-id", "type", "description"),
    "condition": ("hyperedge-id", "label"),
    "message": (
        "id",
        "name",
        "source-id",
        "destination-id",
        "is-task",
        "is-timer",
        "timer-property",
        "last-ref",
        "para-label",
        "is-connector",
    ),
}


# ---------------------------------------------------------------- #
#  Parsing
# ---------------------------------------------------------------- #


def parse_scenarios(text, variant: str = ENRICHED) -> model.ScenarioDocument:
    """Parse XML text (str or UTF-8 bytes) into a validated document."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        raise XmlSyntaxError(f"not well-formed XML: {exc.msg.split(':')[0]}", line, column) from exc
    if root.tag != "scenarios":
        raise ValidationError(f"root element must be <scenarios>, got <{root.tag}>")
    _check_attrs(root)
    for el in root:
        if el.tag not in ("instances", "group"):
            raise ValidationError(f"scenarios: unknown child element <{el.tag}>")
    doc = model.ScenarioDocument(
        date=root.get("date", ""),
        ucm_file=root.get("ucm-file", ""),
        ucm_design_version=root.get("ucm-design-version", ""),
        design_name=root.get("design-name"),
        groups=tuple(_parse_group(el, variant) for el in root if el.tag == "group"),
        instances=_parse_instances(root, variant),
    )
    model.validate_document(doc, variant)
    return doc


def _parse_instances(root, variant):
    instance_lists = [el for el in root if el.tag == "instances"]
    if not instance_lists:
        return ()
    if variant == PLAIN:
        raise VariantError("plain documents carry no <instances> element")
    if len(instance_lists) > 1:
        raise ValidationError("scenarios: more than one <instances> element")
    seen_group = False
    for el in root:
        if el.tag == "group":
            seen_group = True
        elif el.tag == "instances" and seen_group:
            raise ValidationError("scenarios: <instances> must precede all <group> elements")
    instances = []
    for el in instance_lists[0]:
        if el.tag != "instance":
            raise ValidationError(f"instances: unknown child element <{el.tag}>")
        _check_attrs(el)
        instances.append(
            model.ComponentInstance(
                instance_id=el.get("instance-id"), name=el.get("name"), role=el.get("role")
            )
        )
    return tuple(instances)


def _parse_group(el, variant):
    _check_attrs(el)
    scenarios = []
    for child in el:
        if child.tag != "scenario":
            raise ValidationError(f"group: unknown child element <{child.tag}>")
        scenarios.append(_parse_scenario(child, variant))
    return model.Group(
        name=el.get("name"),
        group_id=el.get("group-id"),
        description=el.get("description"),
        scenarios=tuple(scenarios),
    )


def _parse_scenario(el, variant):
    _check_attrs(el)
    bodies = list(el)
    if len(bodies) != 1 or bodies[0].tag not in ("seq", "par"):
        raise ValidationError(
            f"scenario {el.get('name')!r}: content must be exactly one <seq> or <par>"
        )
    return model.Scenario(
        name=el.get("name"),
        scenario_definition_id=el.get("scenario-definition-id"),
        description=el.get("description"),
        body=_parse_step(bodies[0], variant),
    )


def _parse_step(el, variant):
    _check_attrs(el)
    if el.tag == "do":
        return model.Do(
            hyperedge_id=el.get("hyperedge-id"),
            kind=el.get("type"),
            description=el.get("description"),
            name=el.get("name"),
            component_name=el.get("component-name"),
            component_role=el.get("component-role"),
            component_id=el.get("component-id"),
        )
    if el.tag == "condition":
        return model.Condition(
            hyperedge_id=el.get("hyperedge-id"),
            label=el.get("label"),
            expression=el.get("expression"),
        )
    if el.tag == "message":
        if variant == PLAIN:
            raise VariantError("plain documents carry no <message> elements")
        return model.Message(
            id=el.get("id"),
            name=el.get("name"),
            source_id=el.get("source-id"),
            destination_id=el.get("destination-id"),
            is_task=_parse_bool(el, "is-task"),
            is_timer=_parse_bool(el, "is-timer"),
            timer_property=el.get("timer-property"),
            last_ref=el.get("last-ref"),
            description=el.get("description"),
            para_label=el.get("para-label"),
            is_connector=_parse_bool(el, "is-connector"),
            connector_type=el.get("connector-type", ""),
        )
    if el.tag in ("seq", "par"):
        children = tuple(_parse_step(child, variant) for child in el)
        return model.Seq(children) if el.tag == "seq" else model.Par(children)
    raise ValidationError(f"unknown element <{el.tag}>")


def _parse_bool(el, attr):
    value = el.get(attr)
    if value not in ("true", "false"):
        raise ValidationError(f"{el.tag}: attribute {attr} must be 'true' or 'false', got {value!r}")
    return value == "true"


def _check_attrs(el):
    allowed = _ATTRS.get(el.tag)
    if allowed is None:
        raise ValidationError(f"unknown element <{el.tag}>")
    for attr in el.attrib:
        if attr not in allowed:
            raise ValidationError(f"{el.tag}: unknown attribute {attr!r}")
    for attr in _REQUIRED.get(el.tag, ()):
        if el.get(attr) is None:
            raise ValidationError(f"{el.tag}: missing required attribute {attr!r}")


# ---------------------------------------------------------------- #
#  Writing
# ---------------------------------------------------------------- #


def write_document(doc: model.ScenarioDocument, variant: str = ENRICHED) -> str:
    """Serialize canonically.  Plain variant refuses enriched content."""
    model.validate_document(doc, variant)
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    attrs = [
        ("date", doc.date),
        ("ucm-file", doc.ucm_file),
        ("design-name", doc.design_name),
        ("ucm-design-version", doc.ucm_design_version),
    ]
    children: list = []
    if doc.instances:
        children.append(("instances", doc.instances))
    children.extend(("group", group) for group in doc.groups)
    if not children:
        lines.append(f"<scenarios{_fmt(attrs)}/>")
    else:
        lines.append(f"<scenarios{_fmt(attrs)}>")
        for tag, payload in children:
            if tag == "instances":
                lines.append("  <instances>")
                for inst in payload:
                    inst_attrs = [
                        ("instance-id", inst.instance_id),
                        ("name", inst.name),
                        ("role", inst.role),
                    ]
                    lines.append(f"    <instance{_fmt(inst_attrs)}/>")
                lines.append("  </instances>")
            else:
                _write_group(lines, payload, 1)
        lines.append("</scenarios>")
    return "\n".join(lines) + "\n"


def _write_group(lines, group, depth):
    pad = "  " * depth
    attrs = [
        ("group-id", group.group_id),
        ("name", group.name),
        ("description", group.description),
    ]
    if not group.scenarios:
        lines.append(f"{pad}<group{_fmt(attrs)}/>")
        return
    lines.append(f"{pad}<group{_fmt(attrs)}>")
    for scenario in group.scenarios:
        s_attrs = [
            ("scenario-definition-id", scenario.scenario_definition_id),
            ("name", scenario.name),
            ("description", scenario.description),
        ]
        lines.append(f"{pad}  <scenario{_fmt(s_attrs)}>")
        _write_step(lines, scenario.body, depth + 2)
        lines.append(f"{pad}  </scenario>")
    lines.append(f"{pad}</group>")


def _write_step(lines, node, depth):
    pad = "  " * depth
    if isinstance(node, (model.Seq, model.Par)):
        tag = "seq" if isinstance(node, model.Seq) else "par"
        if not node.children:
            lines.append(f"{pad}<{tag}/>")
            return
        lines.append(f"{pad}<{tag}>")
        for child in node.children:
            _write_step(lines, child, depth + 1)
        lines.append(f"{pad}</{tag}>")
    elif isinstance(node, model.Do):
        attrs = [
            ("hyperedge-id", node.hyperedge_id),
            ("name", node.name),
            ("type", node.kind),
            ("description", node.description),
            ("component-name", node.component_name),
            ("component-role", node.component_role),
            ("component-id", node.component_id),
        ]
        lines.append(f"{pad}<do{_fmt(attrs)}/>")
    elif isinstance(node, model.Condition):
        attrs = [
            ("hyperedge-id", node.hyperedge_id),
            ("label", node.label),
            ("expression", node.expression),
        ]
        lines.append(f"{pad}<condition{_fmt(attrs)}/>")
    elif isinstance(node, model.Message):
        attrs = [
            ("id", node.id),
            ("name", node.name),
            ("source-id", node.source_id),
            ("destination-id", node.destination_id),
            ("is-task", _bool(node.is_task)),
            ("is-timer", _bool(node.is_timer)),
            ("timer-property", node.timer_property),
            ("last-ref", node.last_ref),
            ("description", node.description),
            ("para-label", node.para_label),
            ("is-connector", _bool(node.is_connector)),
            ("connector-type", node.connector_type or None),
        ]
        lines.append(f"{pad}<message{_fmt(attrs)}/>")


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _fmt(attrs) -> str:
    parts = []
    for name, value in attrs:
        if value is None:
            continue
        parts.append(f' {name}="{_escape(value)}"')
    return "".join(parts)


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
