"""TTCN-3 test skeleton generation.

One module per document, one testcase per scenario.  The skeleton drives the
scenario from the environment's point of view: start points become stimuli
sent on a charstring port, end points become guarded receive alternatives
with a timeout branch, responsibilities and the remaining event kinds turn
into log statements, synthesized messages and conditions into comments.

Scenarios must be sequential: run interleaving first, a Par block here is an
error.  check_ttcn3 is a light structural linter for the emitted subset so
tests do not need an external compiler.
"""

from __future__ import annotations

import re

from . import model
from .errors import EmitError
from .model import Condition, Do, Message, Par, Seq

GUARD_SECONDS = "5.0"


def emit_ttcn3(doc: model.ScenarioDocument) -> str:
    for scenario in doc.scenarios():
        if any(isinstance(node, Par) for node in _walk(scenario.body)):
            raise EmitError(
                f"scenario {scenario.name!r} still contains a par block; interleave first"
            )
    tc_names = []
    body: list = []
    for scenario in doc.scenarios():
        tc = f"tc_{model.sanitize_name(scenario.name)}"
        tc_names.append(tc)
        body.append("")
        body.append(f"  testcase {tc}() runs on MTC {{")
        for item in _items(scenario.body):
            body.extend(f"    {line}" for line in _statements(item))
        body.append("    setverdict(pass);")
        body.append("  }")
    module = model.sanitize_name(doc.design_name or "scenarios")
    out = [
        f"module {module} {{",
        "",
        "  type port UcmPort message { inout charstring }",
        "",
        "  type component MTC {",
        "    port UcmPort ucmPort;",
        f"    timer tGuard := {GUARD_SECONDS};",
        "  }",
    ]
    out.extend(body)
    out += ["", "  control {"]
    out.extend(f"    execute({tc}());" for tc in tc_names)
    out += ["  }", "}"]
    return "\n".join(out) + "\n"


def _walk(node):
    yield node
    if isinstance(node, (Seq, Par)):
        for child in node.children:
            yield from _walk(child)


def _items(body):
    if isinstance(body, Seq):
        for child in body.children:
            yield from _items(child)
    else:
        yield body


def _statements(item) -> list:
    if isinstance(item, Condition):
        return [f"// condition {item.label}"]
    if isinstance(item, Message):
        return [f"// message {item.name} ({item.source_id} -> {item.destination_id})"]
    do: Do = item
    name = model.sanitize_name(do.name or do.description or do.hyperedge_id)
    if do.kind == "Start":
        return [f'ucmPort.send("{name}");']
    if do.kind == "End_Point":
        return [
            "tGuard.start;",
            "alt {",
            f'  [] ucmPort.receive(charstring:"{name}") {{',
            "    tGuard.stop;",
            "    setverdict(pass);",
            "  }",
            "  [] tGuard.timeout {",
            "    setverdict(fail);",
            "  }",
            "}",
        ]
    if do.kind == "Resp":
        return [f'log("{name}");']
    return [f'log("{do.kind} {name}");']


# ---------------------------------------------------------------- #
#  Subset checker
# ---------------------------------------------------------------- #

_TC_DEF = re.compile(r"testcase\s+(\w+)\s*\(\)\s+runs\s+on\s+(\w+)\s*\{")
_TC_CALL = re.compile(r"execute\((\w+)\(\)\);")


def check_ttcn3(text: str) -> list:
    """Structural diagnostics for the emitted subset; empty means clean.

    Checked: single module wrapper, balanced braces, balanced quotes per
    line, port and timer declared on the component, every testcase both
    defined once and executed from control, and a verdict in every testcase.
    """
    problems = []
    if not re.match(r"\s*module\s+\w+\s*\{", text):
        problems.append("missing module header")
    depth = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.count('"') % 2:
            problems.append(f"line {lineno}: unbalanced string quotes")
        code = re.sub(r'"[^"]*"', "", line)
        depth += code.count("{") - code.count("}")
        if depth < 0:
            problems.append(f"line {lineno}: unbalanced braces")
            depth = 0
    if depth != 0:
        problems.append("unbalanced braces at end of module")
    defined = _TC_DEF.findall(text)
    names = [name for name, _ in defined]
    if len(names) != len(set(names)):
        problems.append("duplicate testcase definitions")
    executed = _TC_CALL.findall(text)
    for name in names:
        if name not in executed:
            problems.append(f"testcase {name} never executed from control")
    for name in executed:
        if name not in names:
            problems.append(f"control executes undefined testcase {name}")
    if names:
        if "port UcmPort" not in text:
            problems.append("component port declaration missing")
        if "timer tGuard" not in text:
            problems.append("guard timer declaration missing")
    for chunk, name in _testcase_bodies(text):
        if "setverdict(" not in chunk:
            problems.append(f"testcase {name} sets no verdict")
    return problems


def _testcase_bodies(text: str):
    for match in _TC_DEF.finditer(text):
        depth = 1
        i = match.end()
        while i < len(text) and depth:
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
            i += 1
        yield text[match.end() : i], match.group(1)
