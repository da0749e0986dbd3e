"""Command line front end.

    causeway transform --input design.scn.xml --format msc --out out/
    causeway traverse --ucm design.ucmx --scenario ring --out ring.scn.xml
    causeway check --input design.scn.xml

Exit codes: 0 success, 1 usage, 2 invalid input, 3 transformation failure
(the failing stage is named in the message).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import customize, model, pipeline, traversal, ucm, xmlio
from .errors import PipelineError, ValidationError
from .synthesis import MappingConfig

_INTERLEAVE = {"keep": "keep-par", "single": "single", "all": "all"}
_POINT_MODE = {"env": "env-message", "action": "action"}
_RESP_MODE = {"action": "action", "self": "self-message"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="causeway", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tr = sub.add_parser("transform", help="scenario XML to msc, xmi or ttcn3")
    tr.add_argument("--input", required=True, help="plain scenario document")
    tr.add_argument("--format", required=True, choices=pipeline.FORMATS)
    tr.add_argument("--out", required=True, help="output directory")
    tr.add_argument("--rules", default=None, help="customization rules file")
    tr.add_argument("--interleave", choices=tuple(_INTERLEAVE), default="keep",
                    help="how to serialize par blocks")
    tr.add_argument("--layout", choices=("generic", "none"), default="generic",
                    help="attach layout hints to xmi output")
    tr.add_argument("--map-start", choices=tuple(_POINT_MODE), default="env",
                    help="start points become env messages or actions")
    tr.add_argument("--map-end", choices=tuple(_POINT_MODE), default="env",
                    help="end points become env messages or actions")
    tr.add_argument("--map-resp", choices=tuple(_RESP_MODE), default="action",
                    help="responsibilities become actions or self-messages")
    tr.add_argument("--no-intermediate", action="store_true",
                    help="do not write the enriched scenario document")

    tv = sub.add_parser("traverse", help="use case map to plain scenario XML")
    tv.add_argument("--ucm", required=True, help="use case map file (.ucmx)")
    tv.add_argument("--scenario", default=None,
                    help="definition to traverse (default: all)")
    tv.add_argument("--out", required=True, help="output scenario file")

    ck = sub.add_parser("check", help="validate a scenario document")
    ck.add_argument("--input", required=True)
    return parser


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".scn.xml", ".xml", ".ucmx"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"causeway: cannot read {path}: {exc.strerror or exc}", file=sys.stderr)
        raise SystemExit(1) from None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "transform":
            return _cmd_transform(args)
        if args.command == "traverse":
            return _cmd_traverse(args)
        return _cmd_check(args)
    except PipelineError as exc:
        print(f"causeway: error [{exc.stage}]: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"causeway: error: {exc}", file=sys.stderr)
        return 2


def _cmd_transform(args) -> int:
    path = Path(args.input)
    doc = xmlio.parse_scenarios(_read(path), variant=xmlio.PLAIN)
    rules = None
    if args.rules:
        rules = customize.parse_rules(_read(Path(args.rules)))
    config = MappingConfig(
        start_point_mode=_POINT_MODE[args.map_start],
        end_point_mode=_POINT_MODE[args.map_end],
        responsibility_mode=_RESP_MODE[args.map_resp],
    )
    result = pipeline.transform_document(
        doc,
        format=args.format,
        config=config,
        rules=rules,
        interleave=_INTERLEAVE[args.interleave],
        layout=args.layout,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(path)
    target = out / f"{stem}{result.suffix}"
    target.write_text(result.output, encoding="utf-8")
    written = [target.name]
    if not args.no_intermediate:
        enriched = xmlio.write_document(result.document, variant=xmlio.ENRICHED)
        (out / f"{stem}.enriched.xml").write_text(enriched, encoding="utf-8")
        written.append(f"{stem}.enriched.xml")
    print(f"wrote {', '.join(written)} in {out}")
    return 0


def _cmd_traverse(args) -> int:
    path = Path(args.ucm)
    graph = ucm.parse_ucm(_read(path))
    names = [args.scenario] if args.scenario else None
    doc = traversal.traverse_document(graph, names=names, ucm_file=path.name)
    target = Path(args.out)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(xmlio.write_document(doc, variant=xmlio.PLAIN), encoding="utf-8")
    print(f"wrote {target} ({len(list(doc.scenarios()))} scenarios)")
    return 0


def _cmd_check(args) -> int:
    doc = xmlio.parse_scenarios(_read(Path(args.input)), variant=xmlio.ENRICHED)
    enriched = bool(doc.instances) or any(
        isinstance(event, model.Message)
        for scenario in doc.scenarios()
        for event in model.iter_events(scenario.body)
    )
    variant = xmlio.ENRICHED if enriched else xmlio.PLAIN
    n_messages = sum(
        isinstance(event, model.Message)
        for scenario in doc.scenarios()
        for event in model.iter_events(scenario.body)
    )
    print(
        f"OK: {variant} document, {len(doc.groups)} groups,"
        f" {len(list(doc.scenarios()))} scenarios, {n_messages} messages"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
