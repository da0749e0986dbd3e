"""Scenario extraction: walk a use case map under a scenario definition.

The engine runs one token at a time, so the produced tree is one causal
ordering of the map, never an invented concurrency.  AND-forks open a Par
block: the first branch runs immediately, the remaining branch tokens wait
on a stack.  A token arriving at an AND-join parks there; the join fires
with the last arrival and the flow resumes on the closest enclosing track
common to all arriving branches, right after the Par block.

Stubs are flattened inline.  Entering one selects a plug-in (for dynamic
stubs: the first whose precondition holds), emits a Connect_Start for the
bound start point and continues inside the plug-in map; a bound end point
emits Connect_End and resumes after the stub, while an unbound end point is
a real End_Point.  Node ids become hyperedge ids; re-visits are suffixed
``.2``, ``.3`` and so on, which also keeps ids unique when one plug-in map
is instantiated from several stubs.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import model, ucm
from .errors import (
    BlockedAlternativeError,
    DeadlockError,
    LoopCapError,
    PostconditionError,
    StubSelectionError,
    TraversalError,
)

DEFAULT_MAX_NODE_VISITS = 100


class _Track:
    """One sequential lane of the scenario under construction."""

    __slots__ = ("parent", "items")

    def __init__(self, parent=None):
        self.parent = parent
        self.items = []


class _ParBuild:
    __slots__ = ("branches",)

    def __init__(self, branches):
        self.branches = branches


@dataclass(frozen=True)
class _Frame:
    stub: ucm.UcmNode
    outer_map: ucm.UcmMap
    binding: ucm.PluginBinding


class _Token:
    __slots__ = ("track", "map", "node", "edge", "frames")

    def __init__(self, track, ucm_map, node, edge, frames):
        self.track = track
        self.map = ucm_map
        self.node = node
        self.edge = edge  # the edge we arrived by (segment selection)
        self.frames = frames


def traverse(graph: ucm.UcmGraph, definition, limits: dict = None) -> model.Scenario:
    """Produce the scenario tree for one definition (object or name)."""
    if isinstance(definition, str):
        if definition not in graph.definitions:
            raise ucm.UcmError(f"unknown scenario definition {definition!r}")
        definition = graph.definitions[definition]
    cap = (limits or {}).get("max-node-visits", DEFAULT_MAX_NODE_VISITS)
    return _Run(graph, cap).run(definition)


def traverse_document(
    graph: ucm.UcmGraph, names=None, limits: dict = None, ucm_file: str = ""
) -> model.ScenarioDocument:
    """Traverse several definitions into one plain scenario document."""
    if names is None:
        names = list(graph.definitions)
    if not names:
        raise ucm.UcmError("map declares no scenario definitions")
    scenarios = tuple(traverse(graph, name, limits) for name in names)
    group = model.Group(name="traversals", scenarios=scenarios, group_id="g1")
    return model.ScenarioDocument(
        date="", ucm_file=ucm_file, design_name=graph.name, groups=(group,)
    )


class _Run:
    def __init__(self, graph: ucm.UcmGraph, cap: int):
        self.graph = graph
        self.cap = cap
        self.env: dict = {}
        self.visits: dict = {}  # (frame path, node id) -> count
        self.occurrences: dict = {}  # node id -> emission count, for id suffixes
        self.arrivals: dict = {}  # (frame path, join id) -> [expected, tracks]

    def run(self, definition: ucm.ScenarioDefinition) -> model.Scenario:
        self.env = dict(self.graph.variables)
        self.env.update(dict(definition.inits))
        root_map = self.graph.root_map
        root_track = _Track()
        triggers = list(definition.triggers)
        stack: list = []
        while True:
            if stack:
                token = stack.pop()
            elif triggers:
                node = root_map.nodes[triggers.pop(0)]
                token = _Token(root_track, root_map, node, None, ())
            else:
                break
            self._run_token(token, stack)
        for (_, join_id), (expected, tracks) in self.arrivals.items():
            raise DeadlockError(
                f"and-join {join_id} saw {len(tracks)} of {expected} branches"
            )
        for expr in definition.postconditions:
            if not ucm.eval_bool_expr(ucm.parse_bool_expr(expr), self.env):
                raise PostconditionError(f"postcondition {expr!r} does not hold")
        return model.Scenario(
            name=definition.name,
            body=model.Seq(tuple(_finalize(root_track))),
            scenario_definition_id=definition.id or None,
        )

    # ------------------------------------------------------------ #

    def _run_token(self, token: _Token, stack: list):
        while True:
            node = token.node
            self._count_visit(token)
            kind = node.kind
            if kind == "start":
                token.track.items.append(self._do("Start", node))
                self._move(token, self._single_out(token, node))
            elif kind == "resp":
                token.track.items.append(self._do("Resp", node))
                for name, value in ucm.parse_effects(node.effect):
                    self.env[name] = value
                self._move(token, self._single_out(token, node))
            elif kind == "or-join":
                self._move(token, self._single_out(token, node))
            elif kind == "waiting-place":
                token.track.items.append(self._do("WP_Enter", node))
                token.track.items.append(self._do("WP_Leave", node))
                self._move(token, self._single_out(token, node))
            elif kind == "or-fork":
                self._or_fork(token, node)
            elif kind == "timer":
                self._timer(token, node)
            elif kind == "and-fork":
                self._and_fork(token, node, stack)
            elif kind == "and-join":
                if not self._and_join(token, node):
                    return
            elif kind == "stub":
                self._enter_stub(token, node)
            elif kind == "end":
                if not self._leave_end(token, node):
                    return
            else:  # pragma: no cover - parser rejects unknown kinds
                raise TraversalError(f"cannot traverse node kind {kind!r}")

    def _count_visit(self, token: _Token):
        key = (tuple(f.stub.id for f in token.frames), token.node.id)
        count = self.visits.get(key, 0) + 1
        self.visits[key] = count
        if count > self.cap:
            raise LoopCapError(
                f"node {token.node.id} visited more than {self.cap} times"
            )

    def _hid(self, node_id: str) -> str:
        count = self.occurrences.get(node_id, 0) + 1
        self.occurrences[node_id] = count
        return node_id if count == 1 else f"{node_id}.{count}"

    def _do(self, kind: str, node: ucm.UcmNode, hid: str = None) -> model.Do:
        comp = self.graph.components.get(node.component) if node.component else None
        return model.Do(
            hyperedge_id=hid if hid is not None else self._hid(node.id),
            kind=kind,
            description=node.name or node.id,
            name=node.name or node.id,
            component_name=comp.name if comp else None,
            component_role=(comp.role or None) if comp else None,
            component_id=comp.id if comp else None,
        )

    def _single_out(self, token: _Token, node: ucm.UcmNode) -> ucm.UcmEdge:
        edges = token.map.out_edges(node.id)
        if len(edges) != 1:  # pragma: no cover - parser checks degrees
            raise TraversalError(f"node {node.id} has {len(edges)} out edges")
        return edges[0]

    def _move(self, token: _Token, edge: ucm.UcmEdge):
        token.edge = edge
        token.node = token.map.nodes[edge.target]

    # ------------------------------------------------------------ #

    def _or_fork(self, token: _Token, node: ucm.UcmNode):
        for edge in token.map.out_edges(node.id):
            if not edge.guard or ucm.eval_bool_expr(ucm.parse_bool_expr(edge.guard), self.env):
                label = edge.label or edge.guard
                if label:
                    token.track.items.append(
                        model.Condition(
                            hyperedge_id=self._hid(node.id),
                            label=label,
                            expression=edge.guard or None,
                        )
                    )
                self._move(token, edge)
                return
        raise BlockedAlternativeError(
            f"no alternative open at or-fork {node.id}"
            f" (guards: {[e.guard for e in token.map.out_edges(node.id)]})"
        )

    def _timer(self, token: _Token, node: ucm.UcmNode):
        token.track.items.append(self._do("Timer_Set", node))
        continuation = next(e for e in token.map.out_edges(node.id) if not e.timeout)
        timeouts = [e for e in token.map.out_edges(node.id) if e.timeout]
        if not continuation.guard or ucm.eval_bool_expr(
            ucm.parse_bool_expr(continuation.guard), self.env
        ):
            token.track.items.append(self._do("Timer_Reset", node))
            self._move(token, continuation)
        elif timeouts:
            token.track.items.append(self._do("Timeout", node))
            self._move(token, timeouts[0])
        else:
            raise BlockedAlternativeError(
                f"timer {node.id}: continuation guard closed and no timeout path"
            )

    def _and_fork(self, token: _Token, node: ucm.UcmNode, stack: list):
        edges = token.map.out_edges(node.id)
        branch_tracks = [_Track(parent=token.track) for _ in edges]
        token.track.items.append(_ParBuild(branch_tracks))
        for track, edge in reversed(list(zip(branch_tracks, edges))[1:]):
            branch = _Token(track, token.map, token.map.nodes[edge.target], edge, token.frames)
            stack.append(branch)
        token.track = branch_tracks[0]
        self._move(token, edges[0])

    def _and_join(self, token: _Token, node: ucm.UcmNode) -> bool:
        """True when the join fired and the token carries the continuation."""
        key = (tuple(f.stub.id for f in token.frames), node.id)
        expected = len(token.map.in_edges(node.id))
        record = self.arrivals.setdefault(key, [expected, []])
        record[1].append(token.track)
        if len(record[1]) < expected:
            return False
        del self.arrivals[key]
        token.track = _common_track(record[1])
        self._move(token, self._single_out(token, node))
        return True

    def _enter_stub(self, token: _Token, node: ucm.UcmNode):
        binding = self._select_binding(node)
        segment = token.edge.segment if token.edge is not None else ""
        start_id = None
        for seg, start in binding.in_binds:
            if seg == segment:
                start_id = start
                break
        if start_id is None and not segment and len(binding.in_binds) == 1:
            start_id = binding.in_binds[0][1]
        if start_id is None:
            raise StubSelectionError(
                f"stub {node.id}: no binding for entry segment {segment!r}"
            )
        plug = self.graph.maps[binding.map_id]
        start = plug.nodes[start_id]
        token.frames = token.frames + (_Frame(node, token.map, binding),)
        token.map = plug
        token.track.items.append(self._do("Connect_Start", start))
        self._move(token, plug.out_edges(start.id)[0])

    def _select_binding(self, stub: ucm.UcmNode) -> ucm.PluginBinding:
        bindings = self.graph.plugins[stub.id]
        if not stub.dynamic:
            return bindings[0]
        for binding in bindings:
            if not binding.precondition or ucm.eval_bool_expr(
                ucm.parse_bool_expr(binding.precondition), self.env
            ):
                return binding
        raise StubSelectionError(f"no plug-in selectable for dynamic stub {stub.id}")

    def _leave_end(self, token: _Token, node: ucm.UcmNode) -> bool:
        """True when the flow continues past a stub boundary."""
        if token.frames:
            frame = token.frames[-1]
            for segment, end_id in frame.binding.out_binds:
                if end_id == node.id:
                    token.track.items.append(self._do("Connect_End", node))
                    token.frames = token.frames[:-1]
                    token.map = frame.outer_map
                    out = next(
                        e for e in frame.outer_map.out_edges(frame.stub.id) if e.segment == segment
                    )
                    self._move(token, out)
                    return True
        token.track.items.append(self._do("End_Point", node))
        return False


def _common_track(tracks) -> _Track:
    chains = []
    for track in tracks:
        chain = []
        while track is not None:
            chain.append(track)
            track = track.parent
        chains.append(list(reversed(chain)))
    common = chains[0][0]
    for level in zip(*chains):
        if all(t is level[0] for t in level):
            common = level[0]
        else:
            break
    return common


def _finalize(track: _Track) -> list:
    items = []
    for item in track.items:
        if isinstance(item, _ParBuild):
            items.append(
                model.Par(tuple(model.Seq(tuple(_finalize(b))) for b in item.branches))
            )
        else:
            items.append(item)
    return items
