"""Shared test utilities: tree builders, independent oracles, generators.

The oracles deliberately re-derive their answers by different algorithms than
the package (ancestor-path comparison instead of recursive cross products,
permutation filtering instead of branch merging, a lattice-walk counter
instead of the multinomial formula, and a token machine for map semantics),
so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import itertools

from causeway import model, synthesis
from causeway.model import Condition, Do, Message, Par, Seq

RELEVANT = frozenset(
    {"Resp", "Start", "End_Point", "Timer_Set", "Timer_Reset", "Timeout", "WP_Enter", "WP_Leave"}
)


# ---------------------------------------------------------------- #
#  Builders
# ---------------------------------------------------------------- #


def do(hid, kind="Resp", name=None, comp=None, role=None):
    """Terse Do builder: comp doubles as component id and name."""
    return Do(
        hyperedge_id=hid,
        kind=kind,
        description=name or hid,
        name=name,
        component_name=comp,
        component_role=role,
        component_id=comp,
    )


def seq(*children):
    return Seq(tuple(children))


def par(*children):
    return Par(tuple(children))


def plain_doc(body, scenario="sc1", group="g", **doc_kw):
    doc_kw.setdefault("date", "2004-01-01")
    doc_kw.setdefault("ucm_file", "design.ucm")
    doc_kw.setdefault("ucm_design_version", "1")
    return model.ScenarioDocument(
        groups=(model.Group(name=group, scenarios=(model.Scenario(name=scenario, body=body),)),),
        **doc_kw,
    )


def multi_doc(*bodies, group="g", **doc_kw):
    doc_kw.setdefault("date", "2004-01-01")
    doc_kw.setdefault("ucm_file", "design.ucm")
    doc_kw.setdefault("ucm_design_version", "1")
    scenarios = tuple(
        model.Scenario(name=f"sc{i}", body=body) for i, body in enumerate(bodies, start=1)
    )
    return model.ScenarioDocument(groups=(model.Group(name=group, scenarios=scenarios),), **doc_kw)


def enrich(body, config=None, **doc_kw):
    """Plain one-scenario document through all four synthesis stages."""
    doc = synthesis.enrich_document(plain_doc(body, **doc_kw), config or synthesis.MappingConfig())
    return doc


def body_of(doc, index=0):
    return list(doc.scenarios())[index].body


def messages_of(node):
    return [e for e in model.iter_events(node) if isinstance(e, Message)]


def dos_of(node):
    return list(model.iter_dos(node))


# ---------------------------------------------------------------- #
#  Partial-order oracle (ancestor paths)
# ---------------------------------------------------------------- #


def leaf_paths(body):
    """Event leaves with their (container-type, child-index) paths."""
    out = []

    def walk(node, path):
        if isinstance(node, (Seq, Par)):
            for i, child in enumerate(node.children):
                walk(child, path + ((type(node), i),))
        elif isinstance(node, (Do, Message)):
            out.append((node, path))

    walk(body, ())
    return out


def oracle_pairs(body):
    """(a, b) iff the deepest common container of a and b is a Seq and a's
    branch comes first.  Conditions are not events."""
    leaves = leaf_paths(body)
    pairs = set()
    for (la, pa), (lb, pb) in itertools.permutations(leaves, 2):
        for (ka, ia), (kb, ib) in zip(pa, pb):
            if ia != ib:
                assert ka is kb
                if ka is Seq and ia < ib:
                    pairs.add((model.event_id(la), model.event_id(lb)))
                break
    return pairs


def oracle_linearizations(body):
    """All permutations of the event ids consistent with oracle_pairs."""
    ids = [model.event_id(leaf) for leaf, _ in leaf_paths(body)]
    pairs = oracle_pairs(body)
    index_pairs = [(ids.index(a), ids.index(b)) for a, b in pairs]
    out = []
    for perm in itertools.permutations(range(len(ids))):
        position = {original: where for where, original in enumerate(perm)}
        if all(position[a] < position[b] for a, b in index_pairs):
            out.append(tuple(ids[i] for i in perm))
    return out


def lattice_count(branch_sizes):
    """Number of merges of k fixed sequences, by walking the consumption
    lattice (memoized recursion, no factorials)."""
    sizes = tuple(branch_sizes)
    cache = {}

    def count(state):
        if state == sizes:
            return 1
        if state in cache:
            return cache[state]
        total = 0
        for j, used in enumerate(state):
            if used < sizes[j]:
                total += count(state[:j] + (used + 1,) + state[j + 1 :])
        cache[state] = total
        return total

    return count((0,) * len(sizes))


# ---------------------------------------------------------------- #
#  Causality invariant checker
# ---------------------------------------------------------------- #


def _instances_of(leaf):
    if isinstance(leaf, Message):
        return {leaf.source_id, leaf.destination_id}
    return {model.instance_of(leaf)}


def causality_violations(enriched_body):
    """Cross-instance causal Do pairs with no covering message or relay.

    For (e1, e2) required-ordered with different instances and no in-between
    message-relevant event touching either instance, a message e1's-instance
    -> e2's-instance must sit between them.  Returns the offending pairs.
    """
    leaves = [leaf for leaf, _ in leaf_paths(enriched_body)]
    by_id = {model.event_id(leaf): leaf for leaf in leaves}
    pairs = oracle_pairs(enriched_body)
    successors: dict = {}
    predecessors: dict = {}
    for a, b in pairs:
        successors.setdefault(a, set()).add(b)
        predecessors.setdefault(b, set()).add(a)

    def relevant(leaf):
        return isinstance(leaf, Message) or leaf.kind in RELEVANT

    violations = []
    for a, b in pairs:
        ea, eb = by_id[a], by_id[b]
        if not (isinstance(ea, Do) and isinstance(eb, Do)):
            continue
        if not (relevant(ea) and relevant(eb)):
            continue
        ia, ib = model.instance_of(ea), model.instance_of(eb)
        if ia == ib:
            continue
        between = successors.get(a, set()) & predecessors.get(b, set())
        if any(
            relevant(by_id[x]) and _instances_of(by_id[x]) & {ia, ib} for x in between
        ):
            continue
        if not any(
            isinstance(by_id[x], Message)
            and by_id[x].source_id == ia
            and by_id[x].destination_id == ib
            for x in between
        ):
            violations.append((a, b))
    return violations


# ---------------------------------------------------------------- #
#  Random generators (seeded by the caller)
# ---------------------------------------------------------------- #


def random_tree(rng, max_events=20, max_components=4, par_depth=2):
    """Well-nested random scenario body honoring the alternation rule."""
    components = ["A", "B", "C", "D"][: rng.randint(2, max_components)]
    counter = itertools.count(1)
    budget = [rng.randint(1, max_events)]

    def gen_do():
        budget[0] -= 1
        n = next(counter)
        comp = rng.choice(components + [None])
        kind = rng.choice(("Resp", "Resp", "Resp", "Start", "End_Point"))
        return do(f"e{n}", kind=kind, name=f"r{n}", comp=comp)

    def gen_seq(depth):
        children = [gen_do()]
        while budget[0] > 0 and rng.random() < 0.6:
            if depth < par_depth and budget[0] >= 2 and rng.random() < 0.25:
                children.append(gen_par(depth))
            else:
                children.append(gen_do())
        return Seq(tuple(children))

    def gen_par(depth):
        branches = []
        for _ in range(rng.randint(2, 3)):
            if budget[0] <= 0:
                break
            branches.append(gen_seq(depth + 1))
        if len(branches) < 2:
            branches.append(Seq((gen_do(),)))
        return Par(tuple(branches))

    return gen_seq(0)


def random_par_block(rng, max_branches=3, max_events=8):
    """Flat Par of Seq branches, all events distinct responsibilities."""
    k = rng.randint(2, max_branches)
    total = rng.randint(k, max_events)
    sizes = [1] * k
    for _ in range(total - k):
        sizes[rng.randrange(k)] += 1
    counter = itertools.count(1)
    comps = ["A", "B", "C", "D"]
    branches = tuple(
        Seq(tuple(do(f"e{next(counter)}", comp=rng.choice(comps)) for _ in range(size)))
        for size in sizes
    )
    return Par(branches), sizes


# ---------------------------------------------------------------- #
#  Expected per-instance message streams (for MSC round-trips)
# ---------------------------------------------------------------- #


def msg_streams(body, config):
    """instance id -> ordered ("out"/"in", message id) tokens, derived
    directly from the chart rules: messages pair their endpoints, start/end
    points pair with Env in env-message mode, self-message responsibilities
    pair with themselves."""
    streams: dict = {}

    def put(inst, token):
        streams.setdefault(inst, []).append(token)

    def walk(node):
        if isinstance(node, (Seq, Par)):
            for child in node.children:
                walk(child)
        elif isinstance(node, Message):
            put(node.source_id, ("out", node.id))
            put(node.destination_id, ("in", node.id))
        elif isinstance(node, Do):
            inst = model.instance_of(node)
            if inst == model.ENV_ID:
                return
            if node.kind == "Start" and config.start_point_mode == "env-message":
                put(model.ENV_ID, ("out", node.hyperedge_id))
                put(inst, ("in", node.hyperedge_id))
            elif node.kind == "End_Point" and config.end_point_mode == "env-message":
                put(inst, ("out", node.hyperedge_id))
                put(model.ENV_ID, ("in", node.hyperedge_id))
            elif node.kind == "Resp" and config.responsibility_mode == "self-message":
                put(inst, ("out", node.hyperedge_id))
                put(inst, ("in", node.hyperedge_id))

    walk(body)
    return streams


# ---------------------------------------------------------------- #
#  Small-step token machine over maps (traversal oracle)
# ---------------------------------------------------------------- #

ORACLE_KINDS = frozenset({"start", "end", "resp", "or-fork", "or-join", "and-fork", "and-join"})


def oracle_supports(graph):
    total = 0
    for ucm_map in graph.maps.values():
        for node in ucm_map.nodes.values():
            total += 1
            if node.kind not in ORACLE_KINDS:
                return False
    return total <= 12


def ucm_runs(graph, definition_name, max_runs=50000):
    """Every completed event order of the single-map token game.

    Tokens advance one node at a time in any order; AND-forks split tokens,
    AND-joins absorb them until full, OR-forks follow the first open guard
    under the current store.  Event ids carry the same .N revisit suffix the
    traversal uses so orders are comparable.
    """
    from causeway import ucm as ucm_mod

    definition = graph.definitions[definition_name]
    assert len(definition.triggers) == 1, "oracle handles single-trigger definitions"
    root = graph.root_map
    runs = []

    def explore(tokens, env, arrivals, occ, events):
        if not tokens:
            assert not any(arrivals.values()), "oracle deadlock"
            runs.append(tuple(events))
            if len(runs) > max_runs:
                raise RuntimeError("oracle run explosion")
            return
        for pick in range(len(tokens)):
            node_id = tokens[pick]
            rest = tokens[:pick] + tokens[pick + 1 :]
            node = root.nodes[node_id]
            env2, arrivals2, occ2 = dict(env), dict(arrivals), dict(occ)
            events2 = list(events)

            def emit():
                occ2[node_id] = occ2.get(node_id, 0) + 1
                n = occ2[node_id]
                events2.append(node_id if n == 1 else f"{node_id}.{n}")

            out = root.out_edges(node_id)
            if node.kind == "start":
                emit()
                explore(rest + [out[0].target], env2, arrivals2, occ2, events2)
            elif node.kind == "resp":
                emit()
                for name, value in ucm_mod.parse_effects(node.effect):
                    env2[name] = value
                explore(rest + [out[0].target], env2, arrivals2, occ2, events2)
            elif node.kind == "end":
                emit()
                explore(rest, env2, arrivals2, occ2, events2)
            elif node.kind == "or-join":
                explore(rest + [out[0].target], env2, arrivals2, occ2, events2)
            elif node.kind == "or-fork":
                for edge in out:
                    if not edge.guard or ucm_mod.eval_bool_expr(
                        ucm_mod.parse_bool_expr(edge.guard), env2
                    ):
                        explore(rest + [edge.target], env2, arrivals2, occ2, events2)
                        break
                else:
                    raise RuntimeError(f"oracle blocked at {node_id}")
            elif node.kind == "and-fork":
                explore(rest + [e.target for e in out], env2, arrivals2, occ2, events2)
            elif node.kind == "and-join":
                arrivals2[node_id] = arrivals2.get(node_id, 0) + 1
                if arrivals2[node_id] == len(root.in_edges(node_id)):
                    arrivals2[node_id] = 0
                    rest = rest + [out[0].target]
                explore(rest, env2, arrivals2, occ2, events2)
            else:  # pragma: no cover
                raise RuntimeError(f"oracle cannot step {node.kind}")

    env = dict(graph.variables)
    env.update(dict(definition.inits))
    explore([definition.triggers[0]], env, {}, {}, [])
    return runs


def ucm_oracle_pairs(runs):
    """Orderings common to every run: the map's own causal requirements."""
    event_sets = {frozenset(run) for run in runs}
    assert len(event_sets) == 1, "runs disagree on the event set"
    first = runs[0]
    pairs = set()
    for a, b in itertools.permutations(first, 2):
        if all(run.index(a) < run.index(b) for run in runs):
            pairs.add((a, b))
    return pairs
