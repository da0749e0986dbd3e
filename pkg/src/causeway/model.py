"""Scenario object model: well-nested seq/par trees of traced path events.

A scenario records one walk through a use case map as a tree.  Seq nodes order
their children, Par nodes leave their children unordered, and the leaves are
path events (Do), branch-guard annotations (Condition) and, once synthesis has
run, inter-component messages (Message).  The tree induces a strict partial
order over its events; causal_pairs and linearizations make that order
explicit and are the oracles everything downstream is tested against.

All node types are immutable after construction; transformations build new
trees.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Optional, Union

from .errors import OverflowCapError, StructuralError, ValidationError

# Reserved pseudo-instance for events not allocated to any component.
ENV_ID = "__env__"
ENV_NAME = "Env"

DO_KINDS = frozenset(
    {
        "Resp",
        "Start",
        "End_Point",
        "WP_Enter",
        "WP_Leave",
        "Connect_Start",
        "Connect_End",
        "Trigger_End",
        "Timer_Set",
        "Timer_Reset",
        "Timeout",
    }
)

# Kinds that take part in message synthesis.  The Connect_*/Trigger_End
# markers only record flattened stub boundaries and are transparent.
MESSAGE_RELEVANT_KINDS = frozenset(
    {
        "Resp",
        "Start",
        "End_Point",
        "Timer_Set",
        "Timer_Reset",
        "Timeout",
        "WP_Enter",
        "WP_Leave",
    }
)

TRANSPARENT_KINDS = DO_KINDS - MESSAGE_RELEVANT_KINDS

CONNECTOR_TYPES = frozenset({"intra-seq", "pre-par", "post-par"})


def sanitize_name(text: str) -> str:
    """Map arbitrary text onto an identifier-safe token, preserving case."""
    return re.sub(r"[^A-Za-z0-9_]", "_", text)


@dataclass(frozen=True)
class Do:
    """One traced path event."""

    hyperedge_id: str
    kind: str
    description: str = ""
    name: Optional[str] = None
    component_name: Optional[str] = None
    component_role: Optional[str] = None
    component_id: Optional[str] = None


@dataclass(frozen=True)
class Condition:
    """The guard of the branch the traversal selected."""

    hyperedge_id: str
    label: str
    expression: Optional[str] = None


@dataclass(frozen=True)
class Message:
    """A synthesized (or customized) communication between two instances."""

    id: str
    name: str
    source_id: str
    destination_id: str
    is_task: bool = False
    is_timer: bool = False
    timer_property: str = ""
    last_ref: str = ""
    description: Optional[str] = None
    para_label: str = ""
    is_connector: bool = False
    connector_type: str = ""


@dataclass(frozen=True)
class Seq:
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Par:
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


StepNode = Union[Seq, Par, Do, Condition, Message]


@dataclass(frozen=True)
class Scenario:
    name: str
    body: StepNode = field(default_factory=Seq)
    scenario_definition_id: Optional[str] = None
    description: Optional[str] = None


@dataclass(frozen=True)
class Group:
    name: str
    scenarios: tuple = ()
    group_id: Optional[str] = None
    description: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))


@dataclass(frozen=True)
class ComponentInstance:
    instance_id: str
    name: str
    role: Optional[str] = None


@dataclass(frozen=True)
class ScenarioDocument:
    date: str = ""
    ucm_file: str = ""
    ucm_design_version: str = ""
    design_name: Optional[str] = None
    groups: tuple = ()
    instances: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "instances", tuple(self.instances))

    def scenarios(self) -> Iterator[Scenario]:
        for group in self.groups:
            yield from group.scenarios


def instance_of(do: Do) -> str:
    """Owning instance of an event; unallocated events belong to the environment."""
    return do.component_id if do.component_id is not None else ENV_ID


def event_id(leaf: StepNode) -> str:
    return leaf.id if isinstance(leaf, Message) else leaf.hyperedge_id


def iter_events(node: StepNode) -> Iterator[Union[Do, Message]]:
    """All Do and Message leaves in document order.  Conditions are not events."""
    if isinstance(node, (Seq, Par)):
        for child in node.children:
            yield from iter_events(child)
    elif isinstance(node, (Do, Message)):
        yield node


def iter_dos(node: StepNode) -> Iterator[Do]:
    for leaf in iter_events(node):
        if isinstance(leaf, Do):
            yield leaf


def replace_children(node: StepNode, children) -> StepNode:
    if isinstance(node, Seq):
        return Seq(tuple(children))
    if isinstance(node, Par):
        return Par(tuple(children))
    raise TypeError(f"not a container node: {type(node).__name__}")


# ---------------------------------------------------------------- #
#  Partial order
# ---------------------------------------------------------------- #


def causal_pairs(scenario_or_node) -> set:
    """Strict partial order implied by the tree, as a set of id pairs.

    (a, b) is returned exactly when event a precedes event b in every
    linearization: Seq orders its children transitively, Par leaves its
    children unordered.  Both Do and Message leaves count as events.
    """
    node = scenario_or_node.body if isinstance(scenario_or_node, Scenario) else scenario_or_node
    _check_tree(node)
    _, pairs = _events_and_pairs(node)
    return pairs


def _events_and_pairs(node):
    if isinstance(node, (Do, Message)):
        return [event_id(node)], set()
    if isinstance(node, Condition):
        return [], set()
    if isinstance(node, Seq):
        seen: list = []
        pairs: set = set()
        for child in node.children:
            ids, child_pairs = _events_and_pairs(child)
            pairs |= child_pairs
            pairs.update((a, b) for a in seen for b in ids)
            seen.extend(ids)
        return seen, pairs
    if isinstance(node, Par):
        seen = []
        pairs = set()
        for child in node.children:
            ids, child_pairs = _events_and_pairs(child)
            pairs |= child_pairs
            seen.extend(ids)
        return seen, pairs
    raise StructuralError(f"unexpected node in tree: {type(node).__name__}")


# ---------------------------------------------------------------- #
#  Linearizations
# ---------------------------------------------------------------- #


def count_linearizations(node: StepNode) -> int:
    """Exact number of linearizations, computed without materializing them.

    For a Par the merges of fixed branch orders number multinomial(n1..nk)
    over the branch event totals, and every branch choice yields distinct
    results because event ids are distinct.
    """
    count, _ = _count(node)
    return count


def _count(node):
    if isinstance(node, (Do, Message)):
        return 1, 1
    if isinstance(node, Condition):
        return 1, 0
    if isinstance(node, Seq):
        count, events = 1, 0
        for child in node.children:
            c, n = _count(child)
            count *= c
            events += n
        return count, events
    if isinstance(node, Par):
        count, totals = 1, []
        for child in node.children:
            c, n = _count(child)
            count *= c
            totals.append(n)
        merges = math.factorial(sum(totals))
        for n in totals:
            merges //= math.factorial(n)
        return count * merges, sum(totals)
    raise StructuralError(f"unexpected node in tree: {type(node).__name__}")


def linearizations(node: StepNode, cap: int) -> list:
    """All distinct total orders of the tree's events, as id sequences.

    Ordered lexicographically by branch index: merges pick from the lowest
    branch first, and child alternatives vary last-child-fastest.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    _check_tree(node)
    count = count_linearizations(node)
    if count > cap:
        raise OverflowCapError(
            f"{count} linearizations exceed the cap of {cap}", count=count, cap=cap
        )
    return [tuple(event_id(leaf) for leaf in order) for order in linearize_leaves(node)]

def linearize_leaves(node: StepNode) -> list:
    """Like linearizations but yielding leaf-node tuples (callers re-use nodes)."""
    if isinstance(node, (Do, Message)):
        return [(node,)]
    if isinstance(node, Condition):
        return [()]
    parts = [linearize_leaves(child) for child in node.children]
    if isinstance(node, Seq):
        result = []
        for combo in product(*parts):
            flat: tuple = ()
            for piece in combo:
                flat += piece
            result.append(flat)
        return result or [()]
    result = []
    for combo in product(*parts):
        result.extend(_merges([piece for piece in combo if piece]))
    return result or [()]


def _merges(sequences):
    if not sequences:
        yield ()
        return
    for i, seq in enumerate(sequences):
        rest = sequences[:i] + ([seq[1:]] if len(seq) > 1 else []) + sequences[i + 1 :]
        for tail in _merges(rest):
            yield (seq[0],) + tail


# ---------------------------------------------------------------- #
#  Parallel-block labels (p<i>.s<j>)
# ---------------------------------------------------------------- #


def par_label_map(body: StepNode) -> dict:
    """Map event id -> positional label like ``p1.s2`` (empty outside Par).

    Par blocks are numbered in depth-first document order per scenario;
    branches are numbered left to right.  Nested blocks chain their segments:
    ``p1.s2.p2.s3``.
    """
    labels: dict = {}
    counter = [0]

    def walk(node, prefix):
        if isinstance(node, Seq):
            for child in node.children:
                walk(child, prefix)
        elif isinstance(node, Par):
            counter[0] += 1
            p = counter[0]
            for j, child in enumerate(node.children, 1):
                segment = f"p{p}.s{j}"
                walk(child, f"{prefix}.{segment}" if prefix else segment)
        elif isinstance(node, (Do, Message)):
            labels[event_id(node)] = prefix

    walk(body, "")
    return labels


# ---------------------------------------------------------------- #
#  Validation
# ---------------------------------------------------------------- #

_SEQ_CHILDREN = (Do, Condition, Par, Message)
_PAR_CHILDREN = (Do, Condition, Seq, Message)


def _check_tree(node):
    """Cheap alternation check used by the order operations."""
    if isinstance(node, Seq):
        for child in node.children:
            if isinstance(child, Seq):
                raise StructuralError("seq directly contains seq")
            _check_tree(child)
    elif isinstance(node, Par):
        for child in node.children:
            if isinstance(child, Par):
                raise StructuralError("par directly contains par")
            _check_tree(child)


def validate_document(doc: ScenarioDocument, variant: str = "enriched") -> None:
    """Enforce every model invariant; raises ValidationError subclasses.

    variant is "plain" or "enriched".  Plain documents must not carry
    instance lists or messages.
    """
    from .errors import VariantError

    if variant not in ("plain", "enriched"):
        raise ValueError(f"unknown variant: {variant}")
    if variant == "plain" and doc.instances:
        raise VariantError("plain documents carry no <instances> list")
    ids = set()
    for inst in doc.instances:
        if not inst.instance_id:
            raise ValidationError("instance: empty instance-id")
        if inst.instance_id in ids:
            raise ValidationError(f"instance: duplicate instance-id {inst.instance_id!r}")
        ids.add(inst.instance_id)
    message_ids: set = set()
    for group in doc.groups:
        if not group.name:
            raise ValidationError("group: empty name attribute")
        for scenario in group.scenarios:
            if not isinstance(scenario.body, (Seq, Par)):
                raise StructuralError(
                    f"scenario {scenario.name!r}: body must be one seq or par element"
                )
            _validate_node(scenario.body, scenario.name, variant, ids, message_ids)


def _validate_node(node, where, variant, instance_ids, message_ids):
    from .errors import VariantError

    if isinstance(node, Do):
        if node.kind not in DO_KINDS:
            raise ValidationError(f"do {node.hyperedge_id!r}: unknown type {node.kind!r}")
        if not node.hyperedge_id:
            raise ValidationError("do: empty hyperedge-id")
        if (node.component_name is None) != (node.component_id is None):
            raise ValidationError(
                f"do {node.hyperedge_id!r}: component-name and component-id "
                "must be both present or both absent"
            )
        if instance_ids and node.component_id is not None and node.component_id not in instance_ids:
            raise ValidationError(
                f"do {node.hyperedge_id!r}: component-id {node.component_id!r} "
                "not in the instance list"
            )
        return
    if isinstance(node, Condition):
        if not node.label:
            raise ValidationError(f"condition {node.hyperedge_id!r}: empty label")
        return
    if isinstance(node, Message):
        if variant == "plain":
            raise VariantError("plain documents carry no <message> elements")
        if not node.id:
            raise ValidationError("message: empty id")
        if node.id in message_ids:
            raise ValidationError(f"message: duplicate id {node.id!r}")
        message_ids.add(node.id)
        if node.is_connector:
            if node.connector_type not in ("pre-par", "post-par"):
                raise ValidationError(
                    f"message {node.id!r}: connector messages need connector-type "
                    "pre-par or post-par"
                )
        elif node.connector_type not in ("", "intra-seq"):
            raise ValidationError(
                f"message {node.id!r}: connector-type {node.connector_type!r} "
                "requires is-connector=true"
            )
        allowed = instance_ids | {ENV_ID} if instance_ids else None
        if allowed is not None:
            for attr, value in (("source-id", node.source_id), ("destination-id", node.destination_id)):
                if value not in allowed:
                    raise ValidationError(
                        f"message {node.id!r}: {attr} {value!r} not in the instance list"
                    )
        return
    if isinstance(node, Seq):
        allowed_types = _SEQ_CHILDREN
    elif isinstance(node, Par):
        allowed_types = _PAR_CHILDREN
    else:
        raise StructuralError(f"{where}: unexpected node {type(node).__name__}")
    for child in node.children:
        if not isinstance(child, allowed_types):
            raise StructuralError(
                f"{where}: {type(node).__name__.lower()} may not contain "
                f"{type(child).__name__.lower()}"
            )
        _validate_node(child, where, variant, instance_ids, message_ids)
