"""Message synthesis: make the causal flow of a scenario explicit.

Four document-to-document stages, run in order:

1. extract_instances     -- collect the participating component instances
2. synthesize_sequential_messages -- messages between consecutive events of
                            different instances inside one Seq
3. synthesize_parallel_messages   -- entry/exit connector messages around Par
                            blocks, via per-block anchor sets
4. assign_context_names  -- replace dummy names with did_<P>_do_<N>

Every stage is pure; trees are rebuilt, never mutated.  Messages carry the
anchoring event in last-ref and a connector-type of intra-seq, pre-par or
post-par.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from . import model
from .errors import InstanceConflictError, PipelineError
from .model import (
    ENV_ID,
    ENV_NAME,
    MESSAGE_RELEVANT_KINDS,
    Condition,
    Do,
    Message,
    Par,
    Scenario,
    Seq,
    instance_of,
)


@dataclass(frozen=True)
class MappingConfig:
    """How start points, end points and responsibilities map onto events.

    env-message renders start/end points as messages exchanged with the
    environment lifeline; action keeps them local.  Responsibilities can stay
    local actions or become self-messages.
    """

    start_point_mode: str = "env-message"
    end_point_mode: str = "env-message"
    responsibility_mode: str = "action"

    def __post_init__(self):
        if self.start_point_mode not in ("env-message", "action"):
            raise ValueError(f"bad start-point-mode: {self.start_point_mode!r}")
        if self.end_point_mode not in ("env-message", "action"):
            raise ValueError(f"bad end-point-mode: {self.end_point_mode!r}")
        if self.responsibility_mode not in ("action", "self-message"):
            raise ValueError(f"bad responsibility-mode: {self.responsibility_mode!r}")


@dataclass(frozen=True)
class AnchorSets:
    """The four per-Par anchor families driving the connector rules.

    pre_par/post_par are deduplicated by instance (first occurrence wins, so
    last-ref points at the earliest anchoring event).  branch_first and
    branch_last keep one entry per anchoring event and are indexed per branch;
    a branch that opens (or closes) with a nested Par contributes that block's
    whole first (or last) set.
    """

    pre_par: tuple
    branch_first: tuple
    branch_last: tuple
    post_par: tuple


def _relevant(item) -> bool:
    return isinstance(item, Do) and item.kind in MESSAGE_RELEVANT_KINDS


def _has_relevant(node) -> bool:
    return any(do.kind in MESSAGE_RELEVANT_KINDS for do in model.iter_dos(node))


# ---------------------------------------------------------------- #
#  Stage 1: instances
# ---------------------------------------------------------------- #


def extract_instances(doc: model.ScenarioDocument) -> model.ScenarioDocument:
    """Populate the instance list from the events, in first-appearance order.

    Events without a component belong to the reserved environment instance.
    Disagreeing component attributes for one id are an error because the
    instance list could not represent them.
    """
    if doc.instances:
        raise InstanceConflictError("document already carries an instance list")
    order: list = []
    by_id: dict = {}
    for scenario in doc.scenarios():
        for do in model.iter_dos(scenario.body):
            if do.component_id is None:
                inst = model.ComponentInstance(ENV_ID, ENV_NAME)
            else:
                inst = model.ComponentInstance(do.component_id, do.component_name, do.component_role)
            known = by_id.get(inst.instance_id)
            if known is None:
                by_id[inst.instance_id] = inst
                order.append(inst)
            elif known != inst:
                raise InstanceConflictError(
                    f"component-id {inst.instance_id!r} appears as "
                    f"{known.name!r}/{known.role!r} and {inst.name!r}/{inst.role!r}"
                )
    return replace(doc, instances=tuple(order))


# ---------------------------------------------------------------- #
#  Dummy names
# ---------------------------------------------------------------- #


class _Counter:
    """Per-scenario dummy numbering: names m1, m2, ... and document-unique ids."""

    def __init__(self, scenario_index: int, start: int = 1):
        self.scenario_index = scenario_index
        self.next = start

    @classmethod
    def resuming(cls, scenario_index: int, body) -> "_Counter":
        highest = 0
        for leaf in model.iter_events(body):
            if isinstance(leaf, Message):
                match = re.fullmatch(r"m(\d+)", leaf.name)
                if match:
                    highest = max(highest, int(match.group(1)))
        return cls(scenario_index, highest + 1)

    def new_message(self, **kw) -> Message:
        n = self.next
        self.next += 1
        return Message(id=f"s{self.scenario_index}m{n}", name=f"m{n}", **kw)


def _anchored_fields(anchor) -> dict:
    """Message flags derived from the anchoring Do event (may be None)."""
    if anchor is None:
        return {"is_task": False, "is_timer": False, "timer_property": "", "last_ref": ""}
    return {
        "is_task": anchor.kind == "Resp",
        "is_timer": anchor.kind in ("Timer_Set", "Timeout"),
        "timer_property": anchor.kind if anchor.kind in ("Timer_Set", "Timeout") else "",
        "last_ref": anchor.hyperedge_id,
    }


# ---------------------------------------------------------------- #
#  Stage 2: sequential messages
# ---------------------------------------------------------------- #


def synthesize_sequential_messages(
    doc: model.ScenarioDocument, config: MappingConfig = MappingConfig()
) -> model.ScenarioDocument:
    """Insert a message between consecutive cross-instance events of a Seq.

    Conditions and stub markers are skipped when pairing; a Par child ends
    the running pair unless it contains no events at all (then it is as
    transparent as a condition).  Parallel causality is left to stage 3.
    """
    if not doc.instances:
        raise PipelineError("instances not extracted yet", stage="synthesize-sequential")
    return _map_scenarios(doc, _sequential_one)


def _sequential_one(scenario: Scenario, index: int, _config) -> Scenario:
    counter = _Counter(index)
    return replace(scenario, body=_sequential_walk(scenario.body, counter))


def _sequential_walk(node, counter):
    if isinstance(node, Par):
        return Par(tuple(_sequential_walk(c, counter) if isinstance(c, Seq) else c for c in node.children))
    if not isinstance(node, Seq):
        return node
    out: list = []
    prev = None
    for child in node.children:
        if isinstance(child, Par):
            rebuilt = _sequential_walk(child, counter)
            out.append(rebuilt)
            if _has_relevant(child):
                prev = None  # parallel causality is not a sequential pair
            continue
        if _relevant(child):
            if prev is not None and instance_of(prev) != instance_of(child):
                out.append(
                    counter.new_message(
                        source_id=instance_of(prev),
                        destination_id=instance_of(child),
                        is_connector=False,
                        connector_type="intra-seq",
                        **_anchored_fields(prev),
                    )
                )
            prev = child
        out.append(child)
    return Seq(tuple(out))


# ---------------------------------------------------------------- #
#  Stage 3: parallel connector messages
# ---------------------------------------------------------------- #


def compute_anchor_sets(par: Par, context) -> AnchorSets:
    """Anchor families for one Par block inside its enclosing Seq (or None)."""
    siblings = []
    index = 0
    if context is not None:
        if not isinstance(context, Seq):
            raise ValueError("context must be the enclosing Seq or None")
        for i, child in enumerate(context.children):
            if child is par:
                index = i
                break
        else:
            raise ValueError("par is not a child of the given context")
        siblings = list(context.children)
    return AnchorSets(
        pre_par=_dedupe(_scan_back(siblings[:index])),
        branch_first=tuple(tuple(_first_set(b)) for b in par.children),
        branch_last=tuple(tuple(_last_set(b)) for b in par.children),
        post_par=_dedupe(_scan_forward(siblings[index + 1 :])),
    )


def _dedupe(anchors):
    seen = set()
    out = []
    for inst, do in anchors:
        if inst not in seen:
            seen.add(inst)
            out.append((inst, do))
    return tuple(out)


def _scan_back(items):
    for item in reversed(items):
        if _relevant(item):
            return [(instance_of(item), item)]
        if isinstance(item, Par):
            lasts = [pair for branch in item.children for pair in _last_set(branch)]
            if lasts:
                return lasts
    return []


def _scan_forward(items):
    for item in items:
        if _relevant(item):
            return [(instance_of(item), item)]
        if isinstance(item, Par):
            firsts = [pair for branch in item.children for pair in _first_set(branch)]
            if firsts:
                return firsts
    return []


def _first_set(branch):
    if _relevant(branch):
        return [(instance_of(branch), branch)]
    if isinstance(branch, Seq):
        return _scan_forward(branch.children)
    return []


def _last_set(branch):
    if _relevant(branch):
        return [(instance_of(branch), branch)]
    if isinstance(branch, Seq):
        return _scan_back(branch.children)
    return []


def synthesize_parallel_messages(
    doc: model.ScenarioDocument, config: MappingConfig = MappingConfig()
) -> model.ScenarioDocument:
    """Apply the four connector rules around every Par block.

    Entry messages (pre-par instance -> branch-first instance) go at the head
    of the sub-branch holding their target event, so sibling branches stay
    maximally concurrent; exit messages (branch-last -> post-par) go at the
    matching tail.  A top-level Par with nothing before it receives entries
    from the environment instead, but only when start points map to
    environment messages.
    """
    if not doc.instances:
        raise PipelineError("instances not extracted yet", stage="synthesize-parallel")
    return _map_scenarios(doc, _parallel_one, config)


def _parallel_one(scenario: Scenario, index: int, config: MappingConfig) -> Scenario:
    counter = _Counter.resuming(index, scenario.body)
    body = scenario.body
    if isinstance(body, Par):
        body = _process_par(body, [], 0, counter, config, top_level=True)
    else:
        body = _process_seq(body, counter, config, top_level=True)
    labels = model.par_label_map(body)
    body = _relabel_messages(body, labels)
    return replace(scenario, body=body)


def _process_seq(seq: Seq, counter, config, top_level):
    out = []
    for i, child in enumerate(seq.children):
        if isinstance(child, Par):
            child = _process_par(child, list(seq.children), i, counter, config, top_level)
        out.append(child)
    return Seq(tuple(out))


def _process_par(par: Par, siblings, index, counter, config, top_level):
    anchors = AnchorSets(
        pre_par=_dedupe(_scan_back(siblings[:index])),
        branch_first=tuple(tuple(_first_set(b)) for b in par.children),
        branch_last=tuple(tuple(_last_set(b)) for b in par.children),
        post_par=_dedupe(_scan_forward(siblings[index + 1 :])),
    )
    entry_env = top_level and not anchors.pre_par and config.start_point_mode == "env-message"
    branches = list(par.children)
    for j, branch in enumerate(branches):
        entries: dict = {}
        for finst, fdo in anchors.branch_first[j]:
            sources = anchors.pre_par or ([(ENV_ID, None)] if entry_env else [])
            for pinst, pdo in sources:
                if pinst == finst:
                    continue
                entries.setdefault(fdo.hyperedge_id, []).append(
                    counter.new_message(
                        source_id=pinst,
                        destination_id=finst,
                        is_connector=True,
                        connector_type="pre-par",
                        **_anchored_fields(pdo),
                    )
                )
        if entries:
            branches[j] = _insert_at_heads(branch, entries)
    for j, branch in enumerate(branches):
        exits: dict = {}
        for linst, ldo in anchors.branch_last[j]:
            for qinst, _qdo in anchors.post_par:
                if qinst == linst:
                    continue
                exits.setdefault(ldo.hyperedge_id, []).append(
                    counter.new_message(
                        source_id=linst,
                        destination_id=qinst,
                        is_connector=True,
                        connector_type="post-par",
                        **_anchored_fields(ldo),
                    )
                )
        if exits:
            branches[j] = _append_at_tails(branches[j], exits)
    # nested blocks, in document order after this one
    for j, branch in enumerate(branches):
        if isinstance(branch, Seq):
            branches[j] = _process_seq(branch, counter, config, top_level=False)
    return Par(tuple(branches))


def _insert_at_heads(branch, groups: dict):
    """Prepend each message group to the seq whose first event it targets."""
    if isinstance(branch, Do) and branch.hyperedge_id in groups:
        return Seq(tuple(groups[branch.hyperedge_id]) + (branch,))
    if not isinstance(branch, Seq):
        return branch
    for item in branch.children:
        if _relevant(item):
            if item.hyperedge_id in groups:
                return Seq(tuple(groups[item.hyperedge_id]) + branch.children)
            return branch
        if isinstance(item, Par) and _has_relevant(item):
            rebuilt = Par(tuple(_insert_at_heads(b, groups) for b in item.children))
            children = list(branch.children)
            children[children.index(item)] = rebuilt
            return Seq(tuple(children))
    return branch


def _append_at_tails(branch, groups: dict):
    """Append each message group to the seq whose last event it anchors at."""
    if isinstance(branch, Do) and branch.hyperedge_id in groups:
        return Seq((branch,) + tuple(groups[branch.hyperedge_id]))
    if not isinstance(branch, Seq):
        return branch
    for item in reversed(branch.children):
        if _relevant(item):
            if item.hyperedge_id in groups:
                return Seq(branch.children + tuple(groups[item.hyperedge_id]))
            return branch
        if isinstance(item, Par) and _has_relevant(item):
            rebuilt = Par(tuple(_append_at_tails(b, groups) for b in item.children))
            children = list(branch.children)
            children[len(children) - 1 - children[::-1].index(item)] = rebuilt
            return Seq(tuple(children))
    return branch


def _relabel_messages(node, labels):
    if isinstance(node, Message):
        return replace(node, para_label=labels.get(node.id, ""))
    if isinstance(node, (Seq, Par)):
        return model.replace_children(node, tuple(_relabel_messages(c, labels) for c in node.children))
    return node


# ---------------------------------------------------------------- #
#  Stage 4: context names
# ---------------------------------------------------------------- #


def assign_context_names(doc: model.ScenarioDocument) -> model.ScenarioDocument:
    """Rename every message did_<P>_do_<N> from its causal neighbourhood.

    P is the nearest named Resp/Start of the sender that causally precedes
    the message (falling back to any named preceding event of the sender,
    then to the sender's instance name); N mirrors this on the receiver side
    with Resp/End_Point.  The name depends only on (P, N), so shared causal
    segments name identically across scenarios.
    """
    names = {inst.instance_id: inst.name for inst in doc.instances}
    names.setdefault(ENV_ID, ENV_NAME)
    return _map_scenarios(doc, _name_one, names)


def _name_one(scenario: Scenario, _index: int, instance_names) -> Scenario:
    pairs = model.causal_pairs(scenario.body)
    events = list(model.iter_events(scenario.body))
    position = {model.event_id(e): i for i, e in enumerate(events)}
    dos = [e for e in events if isinstance(e, Do)]

    def pick(message, preceding, kinds):
        wanted = [
            do
            for do in dos
            if do.name
            and instance_of(do)
            == (message.source_id if preceding else message.destination_id)
            and (kinds is None or do.kind in kinds)
            and (
                (do.hyperedge_id, message.id) in pairs
                if preceding
                else (message.id, do.hyperedge_id) in pairs
            )
        ]
        if not wanted:
            return None
        ids = {do.hyperedge_id for do in wanted}
        if preceding:
            # maximal candidates, latest in document order
            edge = [d for d in wanted if not any((d.hyperedge_id, o) in pairs for o in ids)]
            return max(edge, key=lambda d: position[d.hyperedge_id])
        edge = [d for d in wanted if not any((o, d.hyperedge_id) in pairs for o in ids)]
        return min(edge, key=lambda d: position[d.hyperedge_id])

    def context_name(message):
        p = pick(message, True, ("Resp", "Start")) or pick(message, True, None)
        n = pick(message, False, ("Resp", "End_Point")) or pick(message, False, None)
        p_name = p.name if p is not None else instance_names.get(message.source_id, message.source_id)
        n_name = (
            n.name if n is not None else instance_names.get(message.destination_id, message.destination_id)
        )
        return f"did_{model.sanitize_name(p_name)}_do_{model.sanitize_name(n_name)}"

    def rebuild(node):
        if isinstance(node, Message):
            return replace(node, name=context_name(node))
        if isinstance(node, (Seq, Par)):
            return model.replace_children(node, tuple(rebuild(c) for c in node.children))
        return node

    return replace(scenario, body=rebuild(scenario.body))


# ---------------------------------------------------------------- #
#  Pipeline helper
# ---------------------------------------------------------------- #


def enrich_document(
    doc: model.ScenarioDocument, config: MappingConfig = MappingConfig()
) -> model.ScenarioDocument:
    """Stages 1-4 in order."""
    doc = extract_instances(doc)
    doc = synthesize_sequential_messages(doc, config)
    doc = synthesize_parallel_messages(doc, config)
    return assign_context_names(doc)


def _map_scenarios(doc, fn, extra=None):
    groups = []
    index = 0
    for group in doc.groups:
        scenarios = []
        for scenario in group.scenarios:
            index += 1
            scenarios.append(fn(scenario, index, extra))
        groups.append(replace(group, scenarios=tuple(scenarios)))
    return replace(doc, groups=tuple(groups))
