"""Use case map graphs: the input side of path traversal.

Maps are plain XML (docs/ucm-mini.md): components, boolean variables, one
root map plus plug-in maps of nodes and directed edges, stub bindings and
named scenario definitions.  Node kinds cover start/end points,
responsibilities, OR and AND forks/joins, timers, waiting places and stubs.

Guards and postconditions are boolean expressions over the declared
variables (!, &&, ||, parentheses, true, false); responsibility effects are
semicolon-separated assignments like ``busy=true``.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import UcmError

NODE_KINDS = frozenset(
    {
        "start",
        "end",
        "resp",
        "or-fork",
        "or-join",
        "and-fork",
        "and-join",
        "timer",
        "waiting-place",
        "stub",
    }
)


@dataclass(frozen=True)
class UcmComponent:
    id: str
    name: str
    role: str = ""


@dataclass(frozen=True)
class UcmNode:
    id: str
    kind: str
    name: str = ""
    component: str = ""
    effect: str = ""
    dynamic: bool = False


@dataclass(frozen=True)
class UcmEdge:
    id: str
    source: str
    target: str
    guard: str = ""
    label: str = ""
    timeout: bool = False
    segment: str = ""


@dataclass
class UcmMap:
    id: str
    root: bool = False
    nodes: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)

    def out_edges(self, node_id: str) -> list:
        return [e for e in self.edges if e.source == node_id]

    def in_edges(self, node_id: str) -> list:
        return [e for e in self.edges if e.target == node_id]


@dataclass(frozen=True)
class PluginBinding:
    stub_id: str
    map_id: str
    precondition: str = ""
    in_binds: tuple = ()  # (segment, plug-in start node id)
    out_binds: tuple = ()  # (segment, plug-in end node id)


@dataclass(frozen=True)
class ScenarioDefinition:
    name: str
    id: str = ""
    inits: tuple = ()  # (variable, value)
    triggers: tuple = ()  # start node ids, firing order
    postconditions: tuple = ()  # boolean expressions


@dataclass
class UcmGraph:
    name: str
    components: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)  # name -> initial value
    maps: dict = field(default_factory=dict)
    plugins: dict = field(default_factory=dict)  # stub id -> [PluginBinding]
    definitions: dict = field(default_factory=dict)  # name -> ScenarioDefinition

    @property
    def root_map(self) -> UcmMap:
        for m in self.maps.values():
            if m.root:
                return m
        raise UcmError("no root map")


# ---------------------------------------------------------------- #
#  Boolean expressions
# ---------------------------------------------------------------- #

_TOKEN_RE = re.compile(r"\s*(&&|\|\||[!()]|[A-Za-z_]\w*)")


def parse_bool_expr(text: str):
    """Parse to a small AST; raises UcmError on malformed input."""
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match or not match.group(1):
            if text[pos:].strip():
                raise UcmError(f"bad expression {text!r}")
            break
        tokens.append(match.group(1))
        pos = match.end()
    if not tokens:
        raise UcmError("empty expression")

    def peek():
        return tokens[0] if tokens else None

    def take():
        return tokens.pop(0)

    def parse_or():
        node = parse_and()
        while peek() == "||":
            take()
            node = ("or", node, parse_and())
        return node

    def parse_and():
        node = parse_not()
        while peek() == "&&":
            take()
            node = ("and", node, parse_not())
        return node

    def parse_not():
        if peek() == "!":
            take()
            return ("not", parse_not())
        return parse_atom()

    def parse_atom():
        tok = peek()
        if tok == "(":
            take()
            node = parse_or()
            if not tokens or take() != ")":
                raise UcmError(f"unbalanced parentheses in {text!r}")
            return node
        if tok in ("true", "false"):
            take()
            return ("const", tok == "true")
        if tok and re.fullmatch(r"[A-Za-z_]\w*", tok):
            take()
            return ("var", tok)
        raise UcmError(f"unexpected token {tok!r} in {text!r}")

    ast = parse_or()
    if tokens:
        raise UcmError(f"trailing tokens in {text!r}")
    return ast


def eval_bool_expr(ast, env: dict) -> bool:
    op = ast[0]
    if op == "const":
        return ast[1]
    if op == "var":
        if ast[1] not in env:
            raise UcmError(f"undeclared variable {ast[1]!r}")
        return env[ast[1]]
    if op == "not":
        return not eval_bool_expr(ast[1], env)
    if op == "and":
        return eval_bool_expr(ast[1], env) and eval_bool_expr(ast[2], env)
    return eval_bool_expr(ast[1], env) or eval_bool_expr(ast[2], env)


def expr_names(ast) -> set:
    if ast[0] == "var":
        return {ast[1]}
    if ast[0] in ("not",):
        return expr_names(ast[1])
    if ast[0] in ("and", "or"):
        return expr_names(ast[1]) | expr_names(ast[2])
    return set()


def parse_effects(text: str) -> tuple:
    """``a=true; b=false`` -> ((\"a\", True), (\"b\", False))."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        match = re.fullmatch(r"([A-Za-z_]\w*)\s*=\s*(true|false)", part)
        if not match:
            raise UcmError(f"bad effect {part!r}")
        out.append((match.group(1), match.group(2) == "true"))
    return tuple(out)


# ---------------------------------------------------------------- #
#  Parsing
# ---------------------------------------------------------------- #

_BOOL = {"true": True, "false": False}


def _attrs(elem, allowed: dict, context: str) -> dict:
    for key in elem.attrib:
        if key not in allowed:
            raise UcmError(f"unknown attribute {key!r} on {context}")
    out = {}
    for key, required in allowed.items():
        value = elem.get(key)
        if value is None:
            if required:
                raise UcmError(f"{context} is missing attribute {key!r}")
            continue
        out[key] = value
    return out


def _flag(value, context: str) -> bool:
    if value not in _BOOL:
        raise UcmError(f"{context}: expected true or false, got {value!r}")
    return _BOOL[value]


def parse_ucm(text) -> UcmGraph:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise UcmError(f"not well-formed: {exc}") from None
    if root.tag != "ucm":
        raise UcmError(f"root element must be ucm, got {root.tag!r}")
    head = _attrs(root, {"name": True}, "ucm")
    graph = UcmGraph(name=head["name"])
    for elem in root:
        if elem.tag == "component":
            a = _attrs(elem, {"id": True, "name": False, "role": False}, "component")
            if a["id"] in graph.components:
                raise UcmError(f"duplicate component {a['id']!r}")
            graph.components[a["id"]] = UcmComponent(
                a["id"], a.get("name", a["id"]), a.get("role", "")
            )
        elif elem.tag == "variable":
            a = _attrs(elem, {"name": True, "initial": False}, "variable")
            if a["name"] in graph.variables:
                raise UcmError(f"duplicate variable {a['name']!r}")
            graph.variables[a["name"]] = _flag(a.get("initial", "false"), "variable initial")
        elif elem.tag == "map":
            _parse_map(elem, graph)
        elif elem.tag == "plugin":
            _parse_plugin(elem, graph)
        elif elem.tag == "scenariodef":
            _parse_definition(elem, graph)
        else:
            raise UcmError(f"unknown element {elem.tag!r} under ucm")
    _validate(graph)
    return graph


def _parse_map(elem, graph):
    a = _attrs(elem, {"id": True, "root": False}, "map")
    if a["id"] in graph.maps:
        raise UcmError(f"duplicate map {a['id']!r}")
    ucm_map = UcmMap(id=a["id"], root=_flag(a.get("root", "false"), "map root"))
    edge_auto = 0
    for child in elem:
        if child.tag == "node":
            na = _attrs(
                child,
                {
                    "id": True,
                    "kind": True,
                    "name": False,
                    "component": False,
                    "effect": False,
                    "dynamic": False,
                },
                "node",
            )
            if na["kind"] not in NODE_KINDS:
                raise UcmError(f"unknown node kind {na['kind']!r}")
            if na["id"] in ucm_map.nodes:
                raise UcmError(f"duplicate node {na['id']!r} in map {ucm_map.id}")
            ucm_map.nodes[na["id"]] = UcmNode(
                id=na["id"],
                kind=na["kind"],
                name=na.get("name", ""),
                component=na.get("component", ""),
                effect=na.get("effect", ""),
                dynamic=_flag(na.get("dynamic", "false"), "node dynamic"),
            )
        elif child.tag == "edge":
            ea = _attrs(
                child,
                {
                    "id": False,
                    "from": True,
                    "to": True,
                    "guard": False,
                    "label": False,
                    "timeout": False,
                    "segment": False,
                },
                "edge",
            )
            edge_auto += 1
            ucm_map.edges.append(
                UcmEdge(
                    id=ea.get("id", f"{ucm_map.id}_e{edge_auto}"),
                    source=ea["from"],
                    target=ea["to"],
                    guard=ea.get("guard", ""),
                    label=ea.get("label", ""),
                    timeout=_flag(ea.get("timeout", "false"), "edge timeout"),
                    segment=ea.get("segment", ""),
                )
            )
        else:
            raise UcmError(f"unknown element {child.tag!r} under map")
    graph.maps[ucm_map.id] = ucm_map


def _parse_plugin(elem, graph):
    a = _attrs(elem, {"stub": True, "map": True, "precondition": False}, "plugin")
    in_binds = []
    out_binds = []
    for child in elem:
        if child.tag == "bind":
            ba = _attrs(
                child, {"stub-in": False, "start": False, "stub-out": False, "end": False}, "bind"
            )
            if "stub-in" in ba and "start" in ba and "stub-out" not in ba and "end" not in ba:
                in_binds.append((ba["stub-in"], ba["start"]))
            elif "stub-out" in ba and "end" in ba and "stub-in" not in ba and "start" not in ba:
                out_binds.append((ba["stub-out"], ba["end"]))
            else:
                raise UcmError("bind needs either stub-in+start or stub-out+end")
        else:
            raise UcmError(f"unknown element {child.tag!r} under plugin")
    graph.plugins.setdefault(a["stub"], []).append(
        PluginBinding(
            stub_id=a["stub"],
            map_id=a["map"],
            precondition=a.get("precondition", ""),
            in_binds=tuple(in_binds),
            out_binds=tuple(out_binds),
        )
    )


def _parse_definition(elem, graph):
    a = _attrs(elem, {"name": True, "id": False}, "scenariodef")
    inits = []
    triggers = []
    posts = []
    for child in elem:
        if child.tag == "init":
            ia = _attrs(child, {"variable": True, "value": True}, "init")
            inits.append((ia["variable"], _flag(ia["value"], "init value")))
        elif child.tag == "trigger":
            ta = _attrs(child, {"start": True}, "trigger")
            triggers.append(ta["start"])
        elif child.tag == "post":
            pa = _attrs(child, {"expression": True}, "post")
            posts.append(pa["expression"])
        else:
            raise UcmError(f"unknown element {child.tag!r} under scenariodef")
    if not triggers:
        raise UcmError(f"scenariodef {a['name']!r} has no trigger")
    if a["name"] in graph.definitions:
        raise UcmError(f"duplicate scenariodef {a['name']!r}")
    graph.definitions[a["name"]] = ScenarioDefinition(
        name=a["name"],
        id=a.get("id", ""),
        inits=tuple(inits),
        triggers=tuple(triggers),
        postconditions=tuple(posts),
    )


# ---------------------------------------------------------------- #
#  Whole-graph validation
# ---------------------------------------------------------------- #


def _validate(graph: UcmGraph):
    roots = [m for m in graph.maps.values() if m.root]
    if len(roots) != 1:
        raise UcmError(f"expected exactly one root map, found {len(roots)}")
    for ucm_map in graph.maps.values():
        for edge in ucm_map.edges:
            for end in (edge.source, edge.target):
                if end not in ucm_map.nodes:
                    raise UcmError(f"edge {edge.id} references unknown node {end!r}")
            if edge.guard:
                _check_names(edge.guard, graph)
        for node in ucm_map.nodes.values():
            if node.component and node.component not in graph.components:
                raise UcmError(f"node {node.id} references unknown component {node.component!r}")
            if node.effect:
                for name, _value in parse_effects(node.effect):
                    if name not in graph.variables:
                        raise UcmError(f"effect on {node.id} sets undeclared variable {name!r}")
            _check_degree(node, ucm_map)
    for stub_id, bindings in graph.plugins.items():
        stub_map = _find_stub_map(graph, stub_id)
        stub = stub_map.nodes[stub_id]
        if not stub.dynamic and len(bindings) != 1:
            raise UcmError(f"static stub {stub_id} needs exactly one plugin, has {len(bindings)}")
        out_segments = {e.segment for e in stub_map.out_edges(stub_id) if e.segment}
        for binding in bindings:
            if binding.map_id not in graph.maps:
                raise UcmError(f"plugin for {stub_id} references unknown map {binding.map_id!r}")
            plug = graph.maps[binding.map_id]
            if binding.precondition:
                _check_names(binding.precondition, graph)
            for segment, start in binding.in_binds:
                node = plug.nodes.get(start)
                if node is None or node.kind != "start":
                    raise UcmError(f"bind of {stub_id}/{segment} targets non-start {start!r}")
            for segment, end in binding.out_binds:
                node = plug.nodes.get(end)
                if node is None or node.kind != "end":
                    raise UcmError(f"bind of {stub_id}/{segment} targets non-end {end!r}")
                if segment not in out_segments:
                    raise UcmError(f"stub {stub_id} has no out edge with segment {segment!r}")
    for ucm_map in graph.maps.values():
        for node in ucm_map.nodes.values():
            if node.kind == "stub" and node.id not in graph.plugins:
                raise UcmError(f"stub {node.id} has no plugin bound")
    root_map = graph.root_map
    for definition in graph.definitions.values():
        for var, _value in definition.inits:
            if var not in graph.variables:
                raise UcmError(f"scenariodef inits undeclared variable {var!r}")
        for trigger in definition.triggers:
            node = root_map.nodes.get(trigger)
            if node is None or node.kind != "start":
                raise UcmError(f"trigger {trigger!r} is not a start point of the root map")
        for post in definition.postconditions:
            _check_names(post, graph)


def _check_names(expression: str, graph):
    for name in expr_names(parse_bool_expr(expression)):
        if name not in graph.variables:
            raise UcmError(f"expression {expression!r} uses undeclared variable {name!r}")


def _check_degree(node: UcmNode, ucm_map: UcmMap):
    n_out = len(ucm_map.out_edges(node.id))
    n_in = len(ucm_map.in_edges(node.id))
    kind = node.kind
    if kind == "start" and n_out != 1:
        raise UcmError(f"start {node.id} needs exactly one out edge")
    if kind == "end" and n_out != 0:
        raise UcmError(f"end {node.id} must not have out edges")
    if kind in ("resp", "waiting-place", "or-join") and n_out != 1:
        raise UcmError(f"{kind} {node.id} needs exactly one out edge")
    if kind in ("or-fork", "and-fork") and n_out < 2:
        raise UcmError(f"{kind} {node.id} needs at least two out edges")
    if kind == "and-join":
        if n_in < 2:
            raise UcmError(f"and-join {node.id} needs at least two in edges")
        if n_out != 1:
            raise UcmError(f"and-join {node.id} needs exactly one out edge")
    if kind == "timer":
        plain = [e for e in ucm_map.out_edges(node.id) if not e.timeout]
        if len(plain) != 1:
            raise UcmError(f"timer {node.id} needs exactly one continuation edge")
        if n_out - len(plain) != 1:
            raise UcmError(f"timer {node.id} needs exactly one timeout edge")


def _find_stub_map(graph: UcmGraph, stub_id: str) -> UcmMap:
    for ucm_map in graph.maps.values():
        node = ucm_map.nodes.get(stub_id)
        if node is not None and node.kind == "stub":
            return ucm_map
    raise UcmError(f"plugin references unknown stub {stub_id!r}")
