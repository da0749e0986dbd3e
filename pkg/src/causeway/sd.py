"""UML sequence diagram export as XMI 1.2 text.

Each scenario becomes a UML:Collaboration holding one ClassifierRole per
instance and a UML:Interaction whose UML:Message elements list the scenario's
messages in document order (one valid sequential order of the partial order;
positional labels keep the lost concurrency information readable).  Output is
deterministic: fixed ids, no timestamps.

add_layout_hints decorates previously emitted text with a diagram-layout
extension block and touches nothing else, so emit + hints differs from plain
emit only by the inserted block.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import replace

from . import model
from .errors import EmitError, LayoutConsistencyError
from .model import ENV_ID, ENV_NAME, Do, Message, Par, Seq, instance_of
from .synthesis import MappingConfig

_EXTENDER = "causeway-layout"
LIFELINE_X0 = 60
LIFELINE_DX = 140


def assign_par_labels(doc: model.ScenarioDocument) -> model.ScenarioDocument:
    """Refresh positional labels on messages that sit inside a Par block.

    Messages outside any Par keep whatever label they carry: after
    interleaving the tree is sequential but the old labels still describe
    the original concurrency, which is exactly what the diagram should show.
    """

    def one(scenario):
        labels = model.par_label_map(scenario.body)

        def rebuild(node):
            if isinstance(node, Message) and labels.get(node.id):
                return replace(node, para_label=labels[node.id])
            if isinstance(node, (Seq, Par)):
                return model.replace_children(node, tuple(rebuild(c) for c in node.children))
            return node

        return replace(scenario, body=rebuild(scenario.body))

    groups = tuple(
        replace(g, scenarios=tuple(one(s) for s in g.scenarios)) for g in doc.groups
    )
    return replace(doc, groups=groups)


def emit_xmi(doc: model.ScenarioDocument, config: MappingConfig = MappingConfig()) -> str:
    if not doc.instances:
        raise EmitError("document has no instance list; synthesize messages first")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<XMI xmi.version="1.2" xmlns:UML="org.omg.xmi.namespace.UML">',
        "  <XMI.header>",
        "    <XMI.documentation>",
        "      <XMI.exporter>causeway</XMI.exporter>",
        "    </XMI.documentation>",
        '    <XMI.metamodel xmi.name="UML" xmi.version="1.4"/>',
        "  </XMI.header>",
        "  <XMI.content>",
        f'    <UML:Model xmi.id="model_1" name="{_esc(doc.design_name or "scenarios")}">',
        "      <UML:Namespace.ownedElement>",
    ]
    for s_num, scenario in enumerate(doc.scenarios(), start=1):
        out.extend(_emit_collaboration(scenario, s_num, doc, config))
    out += [
        "      </UML:Namespace.ownedElement>",
        "    </UML:Model>",
        "  </XMI.content>",
        "</XMI>",
    ]
    return "\n".join(out) + "\n"


def _scenario_roles(scenario, doc, config):
    """(instance id, role id suffix ordinal) pairs: all document instances,
    plus the environment when the scenario needs it and it is not listed."""
    ids = [inst.instance_id for inst in doc.instances]
    if ENV_ID not in ids:
        for event in model.iter_events(scenario.body):
            wired = _wire(event, config)
            if wired is not None and ENV_ID in wired[:2]:
                ids.append(ENV_ID)
                break
    return ids


def _wire(event, config):
    """(sender, receiver, base name, label source id) for events shown as
    diagram messages; None for purely local events."""
    if isinstance(event, Message):
        return (event.source_id, event.destination_id, event.name, event.id)
    if not isinstance(event, Do):
        return None
    inst = instance_of(event)
    name = event.name or event.description or event.hyperedge_id
    if event.kind == "Start" and config.start_point_mode == "env-message" and inst != ENV_ID:
        return (ENV_ID, inst, name, event.hyperedge_id)
    if event.kind == "End_Point" and config.end_point_mode == "env-message" and inst != ENV_ID:
        return (inst, ENV_ID, name, event.hyperedge_id)
    if event.kind == "Resp" and config.responsibility_mode == "self-message":
        return (inst, inst, name, event.hyperedge_id)
    return None


def _emit_collaboration(scenario, s_num, doc, config):
    names = {inst.instance_id: inst.name for inst in doc.instances}
    names.setdefault(ENV_ID, ENV_NAME)
    role_ids = _scenario_roles(scenario, doc, config)
    role_of = {iid: f"role_{s_num}_{i}" for i, iid in enumerate(role_ids, start=1)}
    labels = model.par_label_map(scenario.body)
    title = _esc(scenario.name)

    lines = [
        f'        <UML:Collaboration xmi.id="collab_{s_num}" name="{title}">',
        "          <UML:Namespace.ownedElement>",
    ]
    for iid in role_ids:
        lines.append(
            f'            <UML:ClassifierRole xmi.id="{role_of[iid]}" name="{_esc(names[iid])}"/>'
        )
    lines += [
        "          </UML:Namespace.ownedElement>",
        "          <UML:Collaboration.interaction>",
        f'            <UML:Interaction xmi.id="inter_{s_num}" name="{title}">',
        "              <UML:Interaction.message>",
    ]
    k = 0
    for event in model.iter_events(scenario.body):
        wired = _wire(event, config)
        if wired is None:
            continue
        sender, receiver, name, label_key = wired
        if isinstance(event, Message):
            label = event.para_label or labels.get(label_key, "")
        else:
            label = labels.get(label_key, "")
        shown = f"{name}({label})" if label else name
        k += 1
        lines.append(
            f'                <UML:Message xmi.id="msg_{s_num}_{k}" name="{_esc(shown)}"'
            f' sender="{role_of[sender]}" receiver="{role_of[receiver]}"/>'
        )
    lines += [
        "              </UML:Interaction.message>",
        "            </UML:Interaction>",
        "          </UML:Collaboration.interaction>",
        "        </UML:Collaboration>",
    ]
    return lines


def add_layout_hints(
    xmi_text: str,
    doc: model.ScenarioDocument,
    config: MappingConfig = MappingConfig(),
) -> str:
    """Insert deterministic lifeline/event geometry before </XMI.content>.

    Lifelines sit at x = 60 + 140 * position; message ranks follow emitted
    order.  The text is checked against the document it claims to render:
    unknown or missing element ids are a consistency error.  Input that
    already carries a layout block is rejected, as is text whose structure
    cannot be read back.
    """
    if f'xmi.extender="{_EXTENDER}"' in xmi_text:
        raise LayoutConsistencyError("layout hints already present")
    try:
        root = ET.fromstring(xmi_text)
    except ET.ParseError as exc:
        raise LayoutConsistencyError(f"cannot parse document: {exc}") from None
    uml = "{org.omg.xmi.namespace.UML}"
    scenarios = list(doc.scenarios())
    collabs = list(root.iter(f"{uml}Collaboration"))
    if len(collabs) != len(scenarios):
        raise LayoutConsistencyError(
            f"text has {len(collabs)} collaborations, document has {len(scenarios)} scenarios"
        )
    hints = [f'    <XMI.extension xmi.extender="{_EXTENDER}">']
    for s_num, (collab, scenario) in enumerate(zip(collabs, scenarios), start=1):
        cid = collab.get("xmi.id", "")
        if cid != f"collab_{s_num}":
            raise LayoutConsistencyError(f"unexpected collaboration id {cid!r}")
        expected_roles = [
            f"role_{s_num}_{i}"
            for i in range(1, len(_scenario_roles(scenario, doc, config)) + 1)
        ]
        roles = [r.get("xmi.id") for r in collab.iter(f"{uml}ClassifierRole")]
        if roles != expected_roles:
            raise LayoutConsistencyError(f"role ids in {cid} do not match the document")
        n_wired = sum(
            1 for e in model.iter_events(scenario.body) if _wire(e, config) is not None
        )
        msgs = [m.get("xmi.id") for m in collab.iter(f"{uml}Message")]
        if msgs != [f"msg_{s_num}_{k}" for k in range(1, n_wired + 1)]:
            raise LayoutConsistencyError(f"message ids in {cid} do not match the document")
        known = set(roles)
        hints.append(f'      <layout collaboration="{cid}">')
        for i, rid in enumerate(roles):
            hints.append(f'        <lifeline role="{rid}" x="{LIFELINE_X0 + LIFELINE_DX * i}"/>')
        for rank, msg in enumerate(collab.iter(f"{uml}Message"), start=1):
            if msg.get("sender") not in known or msg.get("receiver") not in known:
                raise LayoutConsistencyError(
                    f"message {msg.get('xmi.id')} references an unknown role"
                )
            hints.append(f'        <event message="{msg.get("xmi.id")}" rank="{rank}"/>')
        hints.append("      </layout>")
    hints.append("    </XMI.extension>")
    marker = "  </XMI.content>"
    at = xmi_text.rfind(marker)
    if at < 0:
        raise LayoutConsistencyError("no XMI.content close tag to anchor on")
    return xmi_text[:at] + "\n".join(hints) + "\n" + xmi_text[at:]


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
