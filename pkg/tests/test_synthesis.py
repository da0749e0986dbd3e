"""The four message-synthesis stages, from instance extraction to naming."""

from dataclasses import replace
from pathlib import Path

import pytest

from causeway import model, synthesis, xmlio
from causeway.errors import InstanceConflictError, PipelineError
from causeway.model import ENV_ID, Condition, Message, Par
from causeway.synthesis import MappingConfig

from helpers import do, multi_doc, par, plain_doc, seq

FIXTURES = Path(__file__).parent / "fixtures"

ACTION = MappingConfig(start_point_mode="action", end_point_mode="action")


def fixture_doc(name):
    return xmlio.parse_scenarios((FIXTURES / name).read_text(), variant=xmlio.PLAIN)


def with_instances(doc, *ids):
    instances = tuple(model.ComponentInstance(instance_id=i, name=i) for i in ids)
    return replace(doc, instances=instances)


def scenario_messages(doc, index=0):
    scenario = list(doc.scenarios())[index]
    return [e for e in model.iter_events(scenario.body) if isinstance(e, Message)]


# ------------------------------------------------------------------ #
#  Stage 1: extract_instances
# ------------------------------------------------------------------ #


def test_extract_first_appearance_order():
    doc = synthesis.extract_instances(fixture_doc("callreq_ring.scn.xml"))
    assert [i.instance_id for i in doc.instances] == ["UserO", "AgentO", "AgentT", "UserT"]
    assert doc.instances[0].name == "User:orig"
    assert doc.instances[1].name == "Agent:orig"


def test_extract_unallocated_events_share_the_environment_instance():
    doc = synthesis.extract_instances(plain_doc(seq(do("h1"), do("h2"))))
    assert [i.instance_id for i in doc.instances] == [ENV_ID]
    assert doc.instances[0].name == "Env"


def test_extract_mixed_allocation_keeps_order():
    doc = synthesis.extract_instances(plain_doc(seq(do("h1", comp="A"), do("h2"))))
    assert [i.instance_id for i in doc.instances] == ["A", ENV_ID]


def test_extract_conflicting_component_attributes():
    body = seq(
        model.Do(hyperedge_id="h1", kind="Resp", component_id="A", component_name="Alpha"),
        model.Do(hyperedge_id="h2", kind="Resp", component_id="A", component_name="Beta"),
    )
    with pytest.raises(InstanceConflictError):
        synthesis.extract_instances(plain_doc(body))


def test_extract_refuses_documents_that_already_have_instances():
    doc = synthesis.extract_instances(plain_doc(seq(do("h1", comp="A"))))
    with pytest.raises(InstanceConflictError):
        synthesis.extract_instances(doc)


def test_extract_spans_all_scenarios():
    doc = synthesis.extract_instances(
        multi_doc(seq(do("h1", comp="A")), seq(do("h2", comp="B")))
    )
    assert [i.instance_id for i in doc.instances] == ["A", "B"]


# ------------------------------------------------------------------ #
#  Stage 2: sequential messages
# ------------------------------------------------------------------ #


def test_sequential_message_between_cross_instance_events():
    doc = synthesis.extract_instances(fixture_doc("refine_base.scn.xml"))
    doc = synthesis.synthesize_sequential_messages(doc)
    (msg,) = scenario_messages(doc)
    assert msg.id == "s1m1"
    assert msg.name == "m1"
    assert msg.source_id == "C1"
    assert msg.destination_id == "C2"
    assert msg.connector_type == "intra-seq"
    assert msg.is_connector is False
    assert msg.is_task is True  # anchored on the sending responsibility
    assert msg.last_ref == "h1"


def test_sequential_placement_is_immediately_before_the_target():
    body = seq(do("x", comp="A"), Condition(hyperedge_id="c1", label="ok"), do("y", comp="B"))
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    children = list(next(doc.scenarios()).body.children)
    kinds = [type(c).__name__ for c in children]
    assert kinds == ["Do", "Condition", "Message", "Do"]


def test_sequential_same_instance_pairs_get_no_message():
    body = seq(do("x", comp="A"), do("y", comp="A"))
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    assert scenario_messages(doc) == []


def test_sequential_skips_stub_markers():
    body = seq(
        do("x", comp="A"),
        do("c1", kind="Connect_Start", comp="B"),
        do("c2", kind="Connect_End", comp="B"),
        do("y", comp="B"),
    )
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    (msg,) = scenario_messages(doc)
    assert (msg.source_id, msg.destination_id) == ("A", "B")
    assert msg.last_ref == "x"


def test_sequential_timer_anchors_set_the_timer_flags():
    body = seq(
        do("t1", kind="Timer_Set", comp="A"),
        do("y", comp="B"),
        do("t2", kind="Timeout", comp="B"),
        do("z", comp="C"),
    )
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    first, second = scenario_messages(doc)
    assert first.is_timer is True
    assert first.timer_property == "Timer_Set"
    assert first.is_task is False
    assert second.timer_property == "Timeout"
    assert second.last_ref == "t2"


def test_sequential_event_bearing_par_breaks_the_pair():
    body = seq(do("a", comp="A"), par(seq(do("x", comp="B")), seq(do("y", comp="C"))), do("b", comp="A"))
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    assert scenario_messages(doc) == []


def test_sequential_event_free_par_is_transparent():
    body = seq(do("a", comp="A"), par(seq(), seq()), do("b", comp="B"))
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    (msg,) = scenario_messages(doc)
    assert (msg.source_id, msg.destination_id) == ("A", "B")
    children = next(doc.scenarios()).body.children
    assert isinstance(children[1], Par)
    assert isinstance(children[2], Message)


def test_sequential_recurses_into_branches():
    body = par(seq(do("a", comp="A"), do("b", comp="B")), seq(do("c", comp="C")))
    doc = synthesis.synthesize_sequential_messages(
        synthesis.extract_instances(plain_doc(body))
    )
    (msg,) = scenario_messages(doc)
    assert (msg.source_id, msg.destination_id) == ("A", "B")


def test_sequential_requires_extracted_instances():
    with pytest.raises(PipelineError):
        synthesis.synthesize_sequential_messages(plain_doc(seq(do("x", comp="A"))))


def test_message_ids_carry_the_scenario_index():
    doc = multi_doc(
        seq(do("a1", comp="A"), do("b1", comp="B")),
        seq(do("a2", comp="A"), do("b2", comp="B")),
    )
    doc = synthesis.synthesize_sequential_messages(synthesis.extract_instances(doc))
    assert scenario_messages(doc, 0)[0].id == "s1m1"
    assert scenario_messages(doc, 1)[0].id == "s2m1"


# ------------------------------------------------------------------ #
#  Stage 3: anchor sets and connector messages
# ------------------------------------------------------------------ #


def test_anchor_sets_for_fork_and_join():
    x, b, c, d = do("x", comp="A"), do("b", comp="B"), do("c", comp="C"), do("d", comp="D")
    block = par(seq(b), seq(c))
    context = seq(x, block, d)
    sets = synthesis.compute_anchor_sets(block, context)
    assert [inst for inst, _ in sets.pre_par] == ["A"]
    assert sets.pre_par[0][1] is x
    assert [[inst for inst, _ in first] for first in sets.branch_first] == [["B"], ["C"]]
    assert [[inst for inst, _ in last] for last in sets.branch_last] == [["B"], ["C"]]
    assert [inst for inst, _ in sets.post_par] == ["D"]


def test_anchor_sets_with_nothing_before_the_block():
    block = par(seq(do("b", comp="B")), seq(do("c", comp="C")))
    sets = synthesis.compute_anchor_sets(block, seq(block, do("d", comp="D")))
    assert sets.pre_par == ()


def test_anchor_sets_flatten_nested_branch_tails():
    inner = par(seq(do("b", comp="B")), seq(do("c", comp="C")))
    branch = seq(do("a", comp="A"), inner)
    block = par(branch, seq(do("e", comp="E")))
    sets = synthesis.compute_anchor_sets(block, seq(block, do("d", comp="D")))
    assert [inst for inst, _ in sets.branch_last[0]] == ["B", "C"]


def test_anchor_sets_skip_markers_and_conditions_when_scanning():
    x = do("x", comp="A")
    block = par(seq(do("b", comp="B")))
    context = seq(
        x,
        do("m", kind="Connect_End", comp="Z"),
        Condition(hyperedge_id="c1", label="ok"),
        block,
    )
    sets = synthesis.compute_anchor_sets(block, context)
    assert sets.pre_par == ((("A"), x),)


def test_anchor_sets_dedupe_keeps_the_first_per_instance():
    first_block = par(seq(do("p", comp="A")), seq(do("q", comp="A")))
    block = par(seq(do("b", comp="B")))
    context = seq(first_block, block)
    sets = synthesis.compute_anchor_sets(block, context)
    assert len(sets.pre_par) == 1
    assert sets.pre_par[0][1].hyperedge_id == "p"


def test_anchor_sets_reject_foreign_context():
    block = par(seq(do("b", comp="B")))
    with pytest.raises(ValueError):
        synthesis.compute_anchor_sets(block, seq(do("x", comp="A")))
    with pytest.raises(ValueError):
        synthesis.compute_anchor_sets(block, par(seq(do("x", comp="A"))))


def test_fork_join_connector_messages():
    doc = synthesis.extract_instances(fixture_doc("forkjoin.scn.xml"))
    doc = synthesis.synthesize_sequential_messages(doc, ACTION)
    doc = synthesis.synthesize_parallel_messages(doc, ACTION)
    msgs = scenario_messages(doc)
    table = {(m.source_id, m.destination_id): m for m in msgs}
    assert set(table) == {("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")}
    assert table[("A", "B")].id == "s1m1"
    assert table[("A", "C")].id == "s1m2"
    assert table[("B", "D")].id == "s1m3"
    assert table[("C", "D")].id == "s1m4"
    assert table[("A", "B")].connector_type == "pre-par"
    assert table[("B", "D")].connector_type == "post-par"
    assert all(m.is_connector for m in msgs)
    assert table[("A", "B")].last_ref == "h1"
    assert table[("B", "D")].last_ref == "h2"
    assert table[("A", "B")].para_label == "p1.s1"
    assert table[("C", "D")].para_label == "p1.s2"


def test_entry_messages_multiply_sources_by_branches():
    # two pre-par instances (tails of an earlier par) and two branches
    body = seq(
        par(seq(do("p", comp="A")), seq(do("q", comp="B"))),
        par(seq(do("x", comp="C")), seq(do("y", comp="D"))),
        do("z", comp="E"),
    )
    doc = synthesis.synthesize_parallel_messages(
        synthesis.synthesize_sequential_messages(
            synthesis.extract_instances(plain_doc(body)), ACTION
        ),
        ACTION,
    )
    msgs = scenario_messages(doc)
    entries = [m for m in msgs if m.connector_type == "pre-par"]
    exits = [m for m in msgs if m.connector_type == "post-par"]
    # first block: exits 2 tails x 2 heads; second block: entries 2 x 2, exits 2 x 1
    assert len(entries) == 4
    assert {(m.source_id, m.destination_id) for m in entries} == {
        ("A", "C"), ("B", "C"), ("A", "D"), ("B", "D"),
    }
    assert {(m.source_id, m.destination_id) for m in exits} == {
        ("A", "C"), ("A", "D"), ("B", "C"), ("B", "D"), ("C", "E"), ("D", "E"),
    }


def test_same_instance_connectors_are_skipped():
    body = seq(do("x", comp="A"), par(seq(do("b", comp="A")), seq(do("c", comp="B"))), do("d", comp="B"))
    doc = synthesis.synthesize_parallel_messages(
        synthesis.synthesize_sequential_messages(
            synthesis.extract_instances(plain_doc(body)), ACTION
        ),
        ACTION,
    )
    msgs = scenario_messages(doc)
    assert {(m.source_id, m.destination_id) for m in msgs} == {("A", "B")}
    assert sorted(m.connector_type for m in msgs) == ["post-par", "pre-par"]


def test_environment_entries_for_an_unanchored_top_level_block():
    body = par(seq(do("x", comp="A")), seq(do("y", comp="B")))
    doc = synthesis.synthesize_parallel_messages(
        synthesis.synthesize_sequential_messages(
            synthesis.extract_instances(plain_doc(body))
        )
    )
    msgs = scenario_messages(doc)
    assert {(m.source_id, m.destination_id) for m in msgs} == {(ENV_ID, "A"), (ENV_ID, "B")}
    assert all(m.last_ref == "" for m in msgs)


def test_environment_entries_require_env_start_mode():
    body = par(seq(do("x", comp="A")), seq(do("y", comp="B")))
    doc = synthesis.synthesize_parallel_messages(
        synthesis.synthesize_sequential_messages(
            synthesis.extract_instances(plain_doc(body)), ACTION
        ),
        ACTION,
    )
    assert scenario_messages(doc) == []


def test_environment_entries_stay_top_level_only():
    body = par(
        seq(par(seq(do("x", comp="A")), seq(do("y", comp="B")))),
        seq(do("z", comp="C")),
    )
    doc = synthesis.synthesize_parallel_messages(
        synthesis.synthesize_sequential_messages(
            synthesis.extract_instances(plain_doc(body))
        )
    )
    msgs = scenario_messages(doc)
    env_targets = sorted(m.destination_id for m in msgs if m.source_id == ENV_ID)
    assert env_targets == ["A", "B", "C"]
    assert all(m.source_id == ENV_ID for m in msgs)


def test_connector_counter_resumes_after_sequential_names():
    doc = synthesis.extract_instances(fixture_doc("callreq_ring.scn.xml"))
    doc = synthesis.synthesize_sequential_messages(doc)
    doc = synthesis.synthesize_parallel_messages(doc)
    msgs = scenario_messages(doc)
    assert [m.name for m in msgs] == ["m1", "m2", "m3", "m4"]
    assert [m.id for m in msgs] == ["s1m1", "s1m2", "s1m3", "s1m4"]


def test_callreq_ring_connector_placement_and_labels():
    doc = synthesis.extract_instances(fixture_doc("callreq_ring.scn.xml"))
    doc = synthesis.synthesize_sequential_messages(doc)
    doc = synthesis.synthesize_parallel_messages(doc)
    msgs = scenario_messages(doc)
    ring_entry = next(m for m in msgs if m.destination_id == "UserT")
    ringing_entry = next(m for m in msgs if m.destination_id == "UserO" and m.is_connector)
    assert ring_entry.source_id == "AgentT"
    assert ring_entry.para_label == "p1.s1"
    assert ring_entry.last_ref == "n7"
    assert ringing_entry.para_label == "p1.s2"
    assert not any(m.connector_type == "post-par" for m in msgs)


# ------------------------------------------------------------------ #
#  Stage 4: context names
# ------------------------------------------------------------------ #


def named(hid, text, comp, kind="Resp"):
    return do(hid, kind=kind, name=text, comp=comp)


def msg(mid, src, dst):
    return Message(id=mid, name=mid, source_id=src, destination_id=dst)


def name_of(body, *instances):
    doc = with_instances(plain_doc(body), *instances)
    renamed = synthesis.assign_context_names(doc)
    return scenario_messages(renamed)[0].name


def test_naming_uses_nearest_sender_and_receiver_anchors():
    body = seq(
        named("r1", "first", "A"),
        named("r2", "second", "A"),
        msg("m1", "A", "B"),
        named("r3", "third", "B"),
    )
    assert name_of(body, "A", "B") == "did_second_do_third"


def test_naming_breaks_sender_ties_by_document_order():
    body = seq(
        par(seq(named("r1", "left", "A")), seq(named("r2", "right", "A"))),
        msg("m1", "A", "B"),
        named("r3", "done", "B"),
    )
    assert name_of(body, "A", "B") == "did_right_do_done"


def test_naming_breaks_receiver_ties_by_document_order():
    body = seq(
        named("r0", "go", "A"),
        msg("m1", "A", "B"),
        par(seq(named("r1", "one", "B")), seq(named("r2", "two", "B"))),
    )
    assert name_of(body, "A", "B") == "did_go_do_one"


def test_naming_falls_back_to_any_named_event():
    body = seq(
        named("e1", "fin", "A", kind="End_Point"),
        msg("m1", "A", "B"),
        named("r1", "done", "B"),
    )
    assert name_of(body, "A", "B") == "did_fin_do_done"


def test_naming_falls_back_to_the_instance_name():
    body = seq(do("h1", comp="A"), msg("m1", "A", "B"), named("r1", "done", "B"))
    assert name_of(body, "A", "B") == "did_A_do_done"


def test_naming_uses_env_for_environment_endpoints():
    body = seq(msg("m1", ENV_ID, "B"), named("r1", "done", "B"))
    assert name_of(body, "B") == "did_Env_do_done"


def test_naming_sanitizes_anchor_names():
    body = seq(
        named("r1", "snd-req", "A"),
        msg("m1", "A", "B"),
        named("r2", "ring/ack", "B"),
    )
    assert name_of(body, "A", "B") == "did_snd_req_do_ring_ack"


def test_naming_is_consistent_across_scenarios():
    shared = [
        named("r1", "open", "A"),
        msg("m1", "A", "B"),
        named("r2", "serve", "B"),
    ]
    doc = multi_doc(
        seq(*shared),
        seq(*shared, msg("m2", "B", "C"), named("r3", "close", "C")),
    )
    renamed = synthesis.assign_context_names(with_instances(doc, "A", "B", "C"))
    assert scenario_messages(renamed, 0)[0].name == "did_open_do_serve"
    assert scenario_messages(renamed, 1)[0].name == "did_open_do_serve"
    assert scenario_messages(renamed, 1)[1].name == "did_serve_do_close"


# ------------------------------------------------------------------ #
#  Composition
# ------------------------------------------------------------------ #


def test_enrich_document_runs_the_stages_in_order():
    plain = fixture_doc("callreq_ring.scn.xml")
    config = MappingConfig()
    staged = synthesis.extract_instances(plain)
    staged = synthesis.synthesize_sequential_messages(staged, config)
    staged = synthesis.synthesize_parallel_messages(staged, config)
    staged = synthesis.assign_context_names(staged)
    assert synthesis.enrich_document(plain, config) == staged


def test_callreq_ring_enrichment_names():
    doc = synthesis.enrich_document(fixture_doc("callreq_ring.scn.xml"))
    assert [m.name for m in scenario_messages(doc)] == [
        "did_req_do_snd_req",
        "did_snd_req_do_ringTreatment",
        "did_ringTreatment_do_ring",
        "did_ringTreatment_do_ringing",
    ]


def test_mapping_config_rejects_unknown_modes():
    with pytest.raises(ValueError):
        MappingConfig(start_point_mode="inline")
    with pytest.raises(ValueError):
        MappingConfig(responsibility_mode="message")
