"""Textual message sequence chart output (and a reader for the same subset).

One chart per scenario.  The emitted language is the small instance-oriented
subset described in docs/msc-subset.md: inst declarations, one instance
block per lifeline, out/in message event pairs, actions, conditions, timer
events and par section markers.  Concurrency is kept visible: every
instance involved in a Par block brackets its events of each branch between
``par begin``/``par branch``/``par end`` markers, so branch boundaries line
up across instances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import model
from .errors import EmitError, MscReadError
from .model import ENV_ID, ENV_NAME, Condition, Do, Message, Par, Seq, instance_of
from .synthesis import MappingConfig


def emit_msc(
    doc: model.ScenarioDocument,
    config: MappingConfig = MappingConfig(),
    show_waiting_places: bool = True,
) -> str:
    """Render every scenario of an enriched document as one msc block."""
    if not doc.instances:
        raise EmitError("document has no instance list; synthesize messages first")
    charts = [_emit_scenario(s, doc, config, show_waiting_places) for s in doc.scenarios()]
    return "\n".join(charts)


def _emit_scenario(scenario, doc, config, show_wps) -> str:
    display = _display_names(doc)
    next_event_inst = _bind_conditions(scenario.body, config)

    streams: dict = {}  # instance id -> [event lines]

    def line(inst_id, text):
        streams.setdefault(inst_id, []).append(text)

    def touched(node) -> set:
        out = set()
        if isinstance(node, Do):
            if node.kind in ("Connect_Start", "Connect_End", "Trigger_End"):
                return out
            if not show_wps and node.kind in ("WP_Enter", "WP_Leave"):
                return out
            out.add(instance_of(node))
            if _env_paired(node, config):
                out.add(ENV_ID)
        elif isinstance(node, Message):
            out.update((node.source_id, node.destination_id))
        elif isinstance(node, Condition):
            bound = next_event_inst.get(id(node))
            if bound is not None:
                out.add(bound)
        else:
            for child in node.children:
                out |= touched(child)
        return out

    par_counter = 0

    def walk(node, chain):
        nonlocal par_counter
        if isinstance(node, Seq):
            for child in node.children:
                walk(child, chain)
        elif isinstance(node, Par):
            par_counter += 1
            label = (chain + "." if chain else "") + f"p{par_counter}"
            involved = sorted(touched(node))
            for inst in involved:
                line(inst, f"par begin {label};")
            for k, branch in enumerate(node.children, start=1):
                if k > 1:
                    for inst in involved:
                        line(inst, "par branch;")
                walk(branch, f"{label}.s{k}")
            for inst in involved:
                line(inst, "par end;")
        elif isinstance(node, Message):
            name = node.name
            line(node.source_id, f"out {name},{node.id} to {display[node.destination_id]};")
            line(node.destination_id, f"in {name},{node.id} from {display[node.source_id]};")
        elif isinstance(node, Condition):
            bound = next_event_inst.get(id(node))
            if bound is not None:
                line(bound, f"condition {node.label};")
        elif isinstance(node, Do):
            _emit_do(node, line, display, config, show_wps)

    walk(scenario.body, "")

    used = [inst.instance_id for inst in doc.instances]
    if ENV_ID in streams and ENV_ID not in used:
        used.append(ENV_ID)
    out = [f"msc {model.sanitize_name(scenario.name)};"]
    out += [f"inst {display[iid]};" for iid in used]
    for iid in used:
        out.append(f"instance {display[iid]};")
        out += [f"  {text}" for text in streams.get(iid, [])]
        out.append("endinstance;")
    out.append("endmsc;")
    return "\n".join(out) + "\n"


def _env_paired(do: Do, config: MappingConfig) -> bool:
    if instance_of(do) == ENV_ID:
        return False
    if do.kind == "Start":
        return config.start_point_mode == "env-message"
    if do.kind == "End_Point":
        return config.end_point_mode == "env-message"
    return False


def _emit_do(do, line, display, config, show_wps):
    inst = instance_of(do)
    own = display[inst]
    text = do.name or do.description or do.hyperedge_id
    label = model.sanitize_name(text)
    if do.kind == "Resp":
        if config.responsibility_mode == "self-message":
            line(inst, f"out {label},{do.hyperedge_id} to {own};")
            line(inst, f"in {label},{do.hyperedge_id} from {own};")
        else:
            line(inst, f"action '{text}';")
    elif do.kind == "Start":
        if _env_paired(do, config):
            line(ENV_ID, f"out {label},{do.hyperedge_id} to {own};")
            line(inst, f"in {label},{do.hyperedge_id} from {display[ENV_ID]};")
        else:
            line(inst, f"action '{text}';")
    elif do.kind == "End_Point":
        if _env_paired(do, config):
            line(inst, f"out {label},{do.hyperedge_id} to {display[ENV_ID]};")
            line(ENV_ID, f"in {label},{do.hyperedge_id} from {own};")
        else:
            line(inst, f"action '{text}';")
    elif do.kind == "Timer_Set":
        line(inst, f"starttimer T_{label};")
    elif do.kind == "Timer_Reset":
        line(inst, f"stoptimer T_{label};")
    elif do.kind == "Timeout":
        line(inst, f"timeout T_{label};")
    elif do.kind in ("WP_Enter", "WP_Leave"):
        if show_wps:
            tag = "WP_enter" if do.kind == "WP_Enter" else "WP_leave"
            line(inst, f"condition {tag}_{label};")
    # stub connect and trigger markers have no chart representation


def _bind_conditions(body, config) -> dict:
    """Map id(condition) -> instance id of the next event in document order."""

    def items(node):
        if isinstance(node, (Seq, Par)):
            for child in node.children:
                yield from items(child)
        else:
            yield node

    bound: dict = {}
    pending: list = []
    first_inst = None
    for item in items(body):
        if isinstance(item, Condition):
            pending.append(item)
            continue
        inst = item.source_id if isinstance(item, Message) else instance_of(item)
        if first_inst is None:
            first_inst = inst
        for cond in pending:
            bound[id(cond)] = inst
        pending = []
    for cond in pending:  # trailing conditions settle on the first lifeline
        bound[id(cond)] = first_inst
    return bound


def _display_names(doc) -> dict:
    display = {}
    taken = set()
    instances = list(doc.instances)
    if all(inst.instance_id != ENV_ID for inst in instances):
        instances.append(model.ComponentInstance(ENV_ID, ENV_NAME))
    for inst in instances:
        name = model.sanitize_name(inst.name)
        if name in taken:
            name = f"{name}_{model.sanitize_name(inst.instance_id)}"
        taken.add(name)
        display[inst.instance_id] = name
    return display


# ---------------------------------------------------------------- #
#  Reader
# ---------------------------------------------------------------- #


@dataclass
class MscChart:
    name: str
    declared: list = field(default_factory=list)
    events: dict = field(default_factory=dict)  # instance name -> [event tuples]


_OUT_RE = re.compile(r"out (?P<msg>.+),(?P<id>\S+) to (?P<peer>\S+)$")
_IN_RE = re.compile(r"in (?P<msg>.+),(?P<id>\S+) from (?P<peer>\S+)$")


def read_msc(text: str) -> list:
    """Parse charts written by emit_msc and check their consistency.

    Checks: block structure, declarations matching instance sections, every
    out event having exactly one matching in event (same message id with the
    sender and receiver pointing at each other), and par markers nesting
    properly with equal section counts on every participating lifeline.
    """
    charts: list = []
    chart = None
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not line.endswith(";"):
            raise MscReadError(f"line {lineno}: missing terminator: {line!r}")
        line = line[:-1].strip()
        if line.startswith("msc "):
            if chart is not None:
                raise MscReadError(f"line {lineno}: nested msc block")
            chart = MscChart(name=line[4:].strip())
            continue
        if chart is None:
            raise MscReadError(f"line {lineno}: content outside msc block")
        if line == "endmsc":
            if current is not None:
                raise MscReadError(f"line {lineno}: unterminated instance block")
            _check_chart(chart)
            charts.append(chart)
            chart = None
        elif line.startswith("inst "):
            chart.declared.append(line[5:].strip())
        elif line.startswith("instance "):
            if current is not None:
                raise MscReadError(f"line {lineno}: nested instance block")
            current = line[9:].strip()
            if current not in chart.declared:
                raise MscReadError(f"line {lineno}: undeclared instance {current!r}")
            if current in chart.events:
                raise MscReadError(f"line {lineno}: duplicate instance block {current!r}")
            chart.events[current] = []
        elif line == "endinstance":
            if current is None:
                raise MscReadError(f"line {lineno}: endinstance outside instance block")
            current = None
        else:
            if current is None:
                raise MscReadError(f"line {lineno}: event outside instance block: {line!r}")
            chart.events[current].append(_parse_event(line, lineno))
    if chart is not None:
        raise MscReadError("unterminated msc block")
    return charts


def _parse_event(line: str, lineno: int):
    match = _OUT_RE.fullmatch(line)
    if match:
        return ("out", match["msg"], match["id"], match["peer"])
    match = _IN_RE.fullmatch(line)
    if match:
        return ("in", match["msg"], match["id"], match["peer"])
    if line.startswith("action '") and line.endswith("'"):
        return ("action", line[8:-1])
    if line.startswith("condition "):
        return ("condition", line[10:])
    for word in ("starttimer", "stoptimer", "timeout"):
        if line.startswith(word + " "):
            return (word, line[len(word) + 1 :])
    if line.startswith("par begin "):
        return ("par", "begin", line[10:])
    if line == "par branch":
        return ("par", "branch")
    if line == "par end":
        return ("par", "end")
    raise MscReadError(f"line {lineno}: unrecognised event {line!r}")


def _check_chart(chart: MscChart):
    sides: dict = {}  # message id -> {"out": (inst, msg, peer), "in": ...}
    blocks: dict = {}  # par label -> {instance -> branch count}
    for inst, events in chart.events.items():
        stack: list = []  # open (label, branch count) frames
        for ev in events:
            if ev[0] in ("out", "in"):
                entry = sides.setdefault(ev[2], {})
                if ev[0] in entry and not _is_self(ev, inst):
                    raise MscReadError(f"{chart.name}: duplicate {ev[0]} for message id {ev[2]}")
                entry.setdefault(ev[0], (inst, ev[1], ev[3]))
            elif ev[0] == "par":
                if ev[1] == "begin":
                    stack.append([ev[2], 1])
                elif ev[1] == "branch":
                    if not stack:
                        raise MscReadError(f"{chart.name}: par branch outside block on {inst}")
                    stack[-1][1] += 1
                else:
                    if not stack:
                        raise MscReadError(f"{chart.name}: par end outside block on {inst}")
                    label, count = stack.pop()
                    blocks.setdefault(label, {})[inst] = count
        if stack:
            raise MscReadError(f"{chart.name}: unbalanced par markers on {inst}")
    for label, per_inst in blocks.items():
        if len(set(per_inst.values())) > 1:
            raise MscReadError(f"{chart.name}: branch counts differ across {label}")
    for mid, entry in sides.items():
        if "out" not in entry or "in" not in entry:
            raise MscReadError(f"{chart.name}: unpaired message id {mid}")
        out_inst, out_msg, out_peer = entry["out"]
        in_inst, in_msg, in_peer = entry["in"]
        if out_msg != in_msg or out_peer != in_inst or in_peer != out_inst:
            raise MscReadError(f"{chart.name}: mismatched message pair for id {mid}")


def _is_self(ev, inst) -> bool:
    return ev[3] == inst
