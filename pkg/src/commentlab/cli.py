"""Batch command-line driver for the full pipeline, no service required.

Subcommands: ingest, export, iaa, gold, experiment, serve. Exit codes:
0 success, 1 usage error, 2 data error, 3 internal error. Data outputs are
byte-identical for identical inputs and flags; log chatter goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional

from . import __version__
from .annotation import LABELS, balance_gold_items, cohen_kappa
from .errors import CommentLabError, MalformedRecord
from .evaluation import render_tables, report_to_csv
from .experiments import parse_experiment_config, read_gold_jsonl, run_grid, write_gold_jsonl
from .store import ProjectStore, read_corpus_jsonl, write_corpus_jsonl


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; argparse's default of 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="commentlab", description=__doc__)
    parser.add_argument("--version", action="version", version="commentlab %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_ingest = sub.add_parser("ingest", help="import a JSONL corpus file into a project store")
    p_ingest.add_argument("corpus", help="corpus file (JSONL), or - for stdin")
    p_ingest.add_argument("--store", required=True, help="project store directory")
    p_ingest.add_argument("--project", required=True, help="project name (created if missing)")

    p_export = sub.add_parser("export", help="export a project's comments as JSONL")
    p_export.add_argument("--store", required=True)
    p_export.add_argument("--project", required=True, help="project name or id")
    p_export.add_argument("--topic", default=None)
    p_export.add_argument("--source", default=None)
    p_export.add_argument("-o", "--output", default="-", help="output path (default stdout)")

    p_iaa = sub.add_parser("iaa", help="agreement between two annotation CSV files")
    p_iaa.add_argument("first", help="annotation CSV of the first annotator")
    p_iaa.add_argument("second", help="annotation CSV of the second annotator")

    p_gold = sub.add_parser("gold", help="balance an adjudicated CSV into gold JSONL")
    p_gold.add_argument("adjudicated", help="CSV with header comment_id,label,text")
    p_gold.add_argument("--seed", required=True, type=int)
    p_gold.add_argument("-o", "--output", default="-")

    p_exp = sub.add_parser("experiment", help="run a cross-validated experiment grid")
    p_exp.add_argument("gold", help="gold corpus JSONL")
    p_exp.add_argument("config", help="grid config file (key-value with sections)")
    p_exp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p_exp.add_argument(
        "--stem",
        choices=["on", "off", "both"],
        default=None,
        help="restrict the stemming axis, overriding the config",
    )
    p_exp.add_argument("--format", choices=["csv", "table"], default="csv")
    p_exp.add_argument("-o", "--output", default="-")

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--store", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--token", default=None, help="shared auth token (optional)")
    p_serve.add_argument("--ui", default=None, help="static UI bundle directory, served at /ui")

    return parser


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, encoding="utf-8", newline="")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8", newline="")


def _resolve_project(store: ProjectStore, name_or_id: str, create: bool = False):
    project = store.find_project_by_name(name_or_id)
    if project is None and name_or_id in {p.project_id for p in store.list_projects()}:
        project = store.get_project(name_or_id)
    if project is None:
        if not create:
            raise CommentLabError("no project named %r in this store" % name_or_id)
        project = store.create_project(name_or_id)
        print("created project %s (%s)" % (project.project_id, project.name), file=sys.stderr)
    return project


def cmd_ingest(args) -> int:
    store = ProjectStore(args.store)
    project = _resolve_project(store, args.project, create=True)
    with _open_in(args.corpus) as fh:
        report = store.import_corpus(project.project_id, read_corpus_jsonl(fh))
    print(json.dumps(report.as_dict()))
    return 0


def cmd_export(args) -> int:
    store = ProjectStore(args.store)
    project = _resolve_project(store, args.project)
    rows = store.export_corpus(project.project_id, topic=args.topic, source=args.source)
    out = _open_out(args.output)
    try:
        count = write_corpus_jsonl(rows, out)
    finally:
        if out is not sys.stdout:
            out.close()
    print("exported %d comments" % count, file=sys.stderr)
    return 0


def _read_single_annotator_csv(path: str) -> dict[str, str]:
    with _open_in(path) as fh:
        reader = csv.DictReader(fh)
        required = {"comment_id", "annotator_id", "label"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise MalformedRecord(
                "%s: missing columns: %s" % (path, ", ".join(sorted(missing)))
            )
        labels: dict[str, str] = {}
        annotators = set()
        for row in reader:
            if row["label"] not in LABELS:
                raise MalformedRecord("%s: bad label %r" % (path, row["label"]))
            labels[row["comment_id"]] = row["label"]  # last write wins, like open rounds
            annotators.add(row["annotator_id"])
        if len(annotators) > 1:
            raise MalformedRecord(
                "%s: expected a single annotator, found %s" % (path, ", ".join(sorted(annotators)))
            )
        if not labels:
            raise MalformedRecord("%s: no annotation rows" % path)
    return labels


def cmd_iaa(args) -> int:
    first = _read_single_annotator_csv(args.first)
    second = _read_single_annotator_csv(args.second)
    if set(first) != set(second):
        only_a = sorted(set(first) - set(second))[:5]
        only_b = sorted(set(second) - set(first))[:5]
        raise MalformedRecord(
            "annotation files cover different comments (e.g. %s / %s)" % (only_a, only_b)
        )
    order = list(first)
    result = cohen_kappa([first[c] for c in order], [second[c] for c in order])
    print(
        json.dumps(
            {
                "kappa": result.kappa,
                "pr_a": result.pr_a,
                "pr_e": result.pr_e,
                "n_items": result.n_items,
                "labels": list(result.labels),
                "contingency": result.contingency,
            }
        )
    )
    return 0


def cmd_gold(args) -> int:
    with _open_in(args.adjudicated) as fh:
        reader = csv.DictReader(fh)
        required = {"comment_id", "label"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise MalformedRecord("missing columns: %s" % ", ".join(sorted(missing)))
        items, texts = [], {}
        for row in reader:
            if row["label"] not in LABELS:
                raise MalformedRecord("bad label %r for %r" % (row["label"], row["comment_id"]))
            items.append((row["comment_id"], row["label"]))
            texts[row["comment_id"]] = row.get("text") or ""
    balanced = balance_gold_items(items, args.seed)
    out = _open_out(args.output)
    try:
        count = write_gold_jsonl([(cid, texts[cid], lab) for cid, lab in balanced], out)
    finally:
        if out is not sys.stdout:
            out.close()
    print("gold standard: %d items" % count, file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    config = parse_experiment_config(args.config, seed_override=args.seed)
    if args.stem is not None:
        from dataclasses import replace

        config = replace(config, stem={"on": "yes", "off": "no", "both": "both"}[args.stem])
    with _open_in(args.gold) as fh:
        _, texts, labels = read_gold_jsonl(fh)
    report = run_grid(texts, labels, config)
    rendered = report_to_csv(report) if args.format == "csv" else render_tables(report)
    out = _open_out(args.output)
    try:
        out.write(rendered)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_serve(args) -> int:
    from .service.app import serve

    serve(args.store, host=args.host, port=args.port, auth_token=args.token, ui_dir=args.ui)
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "export": cmd_export,
    "iaa": cmd_iaa,
    "gold": cmd_gold,
    "experiment": cmd_experiment,
    "serve": cmd_serve,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except CommentLabError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as exc:  # noqa: BLE001 -- last-resort guard for exit code 3
        print("internal error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
