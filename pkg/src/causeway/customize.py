"""Customization rules and interleaving control.

Rules come from a small line-oriented text format:

    # comment
    rename message|component|responsibility|start|end <old> <new>
    param <match> <p1> [<p2> ...]
    protocol <match> := > Name ; < Name [; ...]
    interpose <match> via <Instance>

Rules apply in families (renames, then params, then protocols, then
interpositions); within a family the first matching rule wins per element.
``>`` keeps the matched message's direction, ``<`` reverses it.  A message
matched by both a protocol and an interposition is a conflict.

Interleaving turns Par blocks into sequential orders: ``single`` keeps one
arbitrary-but-deterministic order, ``all`` expands every scenario into one
copy per distinct order (guarded by a hard cap).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import model
from .errors import OverflowCapError, RuleConflictError, RuleError
from .model import Condition, Do, Message, Par, Scenario, Seq

INTERLEAVE_MODES = ("keep-par", "single", "all")
INTERLEAVE_CAP = 64

_RENAME_KINDS = ("message", "component", "responsibility", "start", "end")
_DO_KIND_FOR = {"responsibility": "Resp", "start": "Start", "end": "End_Point"}


@dataclass(frozen=True)
class ProtocolStep:
    forward: bool  # False reverses source and destination
    name: str


@dataclass(frozen=True)
class CustomizationRuleSet:
    renames: tuple = ()  # (kind, old, new)
    params: tuple = ()  # (match, (p1, p2, ...))
    protocols: tuple = ()  # (match, (ProtocolStep, ...))
    interpositions: tuple = ()  # (match, via_instance_name)


def parse_rules(text: str) -> CustomizationRuleSet:
    renames: list = []
    params: list = []
    protocols: list = []
    interpositions: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        def bad(why: str):
            return RuleError(f"line {lineno}: {why}: {raw.strip()!r}")

        if ":=" in line:
            head, _, rhs = line.partition(":=")
            tokens = head.split()
            if len(tokens) != 2 or tokens[0] != "protocol":
                raise bad("malformed protocol rule")
            steps = []
            for part in rhs.split(";"):
                part = part.strip()
                if not part:
                    continue
                bits = part.split()
                if len(bits) != 2 or bits[0] not in (">", "<"):
                    raise bad(f"malformed protocol step {part!r}")
                steps.append(ProtocolStep(bits[0] == ">", bits[1]))
            if not steps:
                raise bad("protocol rule with no steps")
            protocols.append((tokens[1], tuple(steps)))
            continue
        tokens = line.split()
        if tokens[0] == "rename":
            if len(tokens) != 4 or tokens[1] not in _RENAME_KINDS:
                raise bad("expected: rename <kind> <old> <new>")
            renames.append((tokens[1], tokens[2], tokens[3]))
        elif tokens[0] == "param":
            if len(tokens) < 3:
                raise bad("expected: param <match> <p1> [...]")
            params.append((tokens[1], tuple(tokens[2:])))
        elif tokens[0] == "interpose":
            if len(tokens) != 4 or tokens[2] != "via":
                raise bad("expected: interpose <match> via <instance>")
            interpositions.append((tokens[1], tokens[3]))
        else:
            raise bad(f"unknown rule {tokens[0]!r}")
    return CustomizationRuleSet(
        tuple(renames), tuple(params), tuple(protocols), tuple(interpositions)
    )


def apply_rules(doc: model.ScenarioDocument, rules: CustomizationRuleSet) -> model.ScenarioDocument:
    doc = _apply_renames(doc, rules.renames)
    doc = _apply_params(doc, rules.params)
    _check_conflicts(doc, rules)
    doc = _apply_protocols(doc, rules.protocols)
    doc = _apply_interpositions(doc, rules.interpositions)
    return doc


def _first_match(rules, name):
    for rule in rules:
        if rule[0] == name:
            return rule
    return None


def _apply_renames(doc, renames):
    by_kind = {kind: [(old, new) for k, old, new in renames if k == kind] for kind in _RENAME_KINDS}

    def rename(table, name):
        for old, new in table:
            if old == name:
                return new
        return name

    def rebuild(node):
        if isinstance(node, Message):
            return replace(node, name=rename(by_kind["message"], node.name))
        if isinstance(node, Do):
            out = node
            if out.component_name is not None:
                out = replace(out, component_name=rename(by_kind["component"], out.component_name))
            for kind, do_kind in _DO_KIND_FOR.items():
                if out.kind == do_kind and out.name:
                    out = replace(out, name=rename(by_kind[kind], out.name))
            return out
        if isinstance(node, (Seq, Par)):
            return model.replace_children(node, tuple(rebuild(c) for c in node.children))
        return node

    doc = _map_bodies(doc, rebuild)
    instances = tuple(
        replace(inst, name=rename(by_kind["component"], inst.name)) for inst in doc.instances
    )
    return replace(doc, instances=instances)


def _apply_params(doc, params):
    def rebuild(node):
        if isinstance(node, Message):
            rule = _first_match(params, node.name)
            if rule is not None:
                return replace(node, name=f"{node.name}({', '.join(rule[1])})")
            return node
        if isinstance(node, (Seq, Par)):
            return model.replace_children(node, tuple(rebuild(c) for c in node.children))
        return node

    return _map_bodies(doc, rebuild)


def _check_conflicts(doc, rules):
    protocol_matches = {m for m, _ in rules.protocols}
    interpose_matches = {m for m, _ in rules.interpositions}
    for scenario in doc.scenarios():
        for event in model.iter_events(scenario.body):
            if (
                isinstance(event, Message)
                and event.name in protocol_matches
                and event.name in interpose_matches
            ):
                raise RuleConflictError(
                    f"message {event.name!r} matched by both a protocol and an interposition"
                )


def _apply_protocols(doc, protocols):
    def rebuild(node):
        if isinstance(node, (Seq, Par)):
            out = []
            for child in node.children:
                if isinstance(child, Message):
                    rule = _first_match(protocols, child.name)
                    if rule is not None:
                        for k, step in enumerate(rule[1], start=1):
                            src, dst = child.source_id, child.destination_id
                            if not step.forward:
                                src, dst = dst, src
                            out.append(
                                replace(
                                    child,
                                    id=f"{child.id}_s{k}",
                                    name=step.name,
                                    source_id=src,
                                    destination_id=dst,
                                )
                            )
                        continue
                out.append(rebuild(child))
            return model.replace_children(node, tuple(out))
        return node

    return _map_bodies(doc, rebuild)


def _apply_interpositions(doc, interpositions):
    if not interpositions:
        return doc
    used: dict = {}  # via name -> instance id

    def via_id(name, doc_instances):
        if name in used:
            return used[name]
        for inst in doc_instances:
            if inst.name == name:
                used[name] = inst.instance_id
                return inst.instance_id
        new_id = model.sanitize_name(name)
        if any(inst.instance_id == new_id for inst in doc_instances):
            new_id += "_via"
        used[name] = new_id
        return new_id

    instances = list(doc.instances)

    def rebuild(node):
        if isinstance(node, (Seq, Par)):
            out = []
            for child in node.children:
                if isinstance(child, Message):
                    rule = _first_match(interpositions, child.name)
                    if rule is not None:
                        mid = via_id(rule[1], instances)
                        if all(inst.instance_id != mid for inst in instances):
                            instances.append(model.ComponentInstance(mid, rule[1]))
                        out.append(replace(child, id=f"{child.id}_a", destination_id=mid))
                        out.append(replace(child, id=f"{child.id}_b", source_id=mid))
                        continue
                out.append(rebuild(child))
            return model.replace_children(node, tuple(out))
        return node

    doc = _map_bodies(doc, rebuild)
    return replace(doc, instances=tuple(instances))


# ---------------------------------------------------------------- #
#  Interleaving
# ---------------------------------------------------------------- #


def synthesize_interleavings(
    doc: model.ScenarioDocument, mode: str = "keep-par", cap: int = INTERLEAVE_CAP
) -> model.ScenarioDocument:
    """Flatten Par blocks per the requested mode.

    keep-par returns the document unchanged.  single replaces every Par with
    its branches laid end to end in branch order.  all replaces each scenario
    holding a Par with one copy per distinct order, named <name>_il<N>;
    message ids get the same suffix so they stay unique document-wide.
    """
    if mode not in INTERLEAVE_MODES:
        raise ValueError(f"unknown interleave mode {mode!r}")
    if mode == "keep-par":
        return doc
    groups = []
    for group in doc.groups:
        scenarios: list = []
        for scenario in group.scenarios:
            if not any(isinstance(n, Par) for n in _subtrees(scenario.body)):
                scenarios.append(scenario)
            elif mode == "single":
                scenarios.append(replace(scenario, body=Seq(tuple(_flatten(scenario.body)))))
            else:
                scenarios.extend(_expand_all(scenario, cap))
        groups.append(replace(group, scenarios=tuple(scenarios)))
    return replace(doc, groups=tuple(groups))


def _subtrees(node):
    yield node
    if isinstance(node, (Seq, Par)):
        for child in node.children:
            yield from _subtrees(child)


def _flatten(node):
    if isinstance(node, (Seq, Par)):
        return [leaf for child in node.children for leaf in _flatten(child)]
    return [node]


def _expand_all(scenario: Scenario, cap: int):
    count = model.count_linearizations(scenario.body)
    if count > cap:
        raise OverflowCapError(
            f"scenario {scenario.name!r} has {count} interleavings, cap is {cap}",
            count=count,
            cap=cap,
        )
    # bind each condition to the event that follows it in document order
    bound: dict = {}  # event id -> [conditions]
    trailing: list = []
    pending: list = []
    for item in _flatten(scenario.body):
        if isinstance(item, Condition):
            pending.append(item)
        else:
            bound.setdefault(model.event_id(item), []).extend(pending)
            pending = []
    trailing = pending
    out = []
    for n, order in enumerate(model.linearize_leaves(scenario.body), start=1):
        children: list = []
        for leaf in order:
            children.extend(bound.get(model.event_id(leaf), ()))
            if isinstance(leaf, Message):
                leaf = replace(leaf, id=f"{leaf.id}_il{n}")
            children.append(leaf)
        children.extend(trailing)
        out.append(
            replace(
                scenario,
                name=f"{scenario.name}_il{n}",
                scenario_definition_id=(
                    f"{scenario.scenario_definition_id}_il{n}"
                    if scenario.scenario_definition_id
                    else None
                ),
                body=Seq(tuple(children)),
            )
        )
    return out


def _map_bodies(doc, rebuild):
    groups = []
    for group in doc.groups:
        scenarios = tuple(replace(s, body=rebuild(s.body)) for s in group.scenarios)
        groups.append(replace(group, scenarios=scenarios))
    return replace(doc, groups=tuple(groups))
