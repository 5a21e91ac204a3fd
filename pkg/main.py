#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
MMT Theory Graph Command Line
=============================

Batch interface to the document store:

    python main.py --store mmt_store init
    python main.py commit tests/fixtures/fol.omdoc tests/fixtures/algebra1.omdoc -m "algebra"
    python main.py deref "http://cds.omdoc.org/math/algebra1.omdoc?Ring?add/grp/mon/mag/*"
    python main.py query "http://cds.omdoc.org/math/algebra1.omdoc?Ring" "(Imports)+"
    python main.py serve --port 5001

Exit codes: 0 success, 1 validation or lookup failure, 2 usage error.
"""

import argparse
import logging
import sys

from config import DEFAULT_HOST, DEFAULT_PORT, DEFAULT_STYLE_URI, store_dir
from errors import MalformedUri, MmtError, NotFound, UnknownRelation, ValidationRejected
from service import (
    OUTPUT_FORMATS, abox_answer, cone_answer, deref_answer, flatten_answer, present_answer, query_answer,
    report_answer, revision_answer, status_answer, validate_answer,
)
from store import DocumentStore
from web_server import create_app

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="mmt", description="Modular theory graph store and toolkit")
    parser.add_argument("--store", help="store directory (default: $MMT_STORE or ./mmt_store)")
    parser.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS, default="lines",
                        help="machine output mode")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", help="create an empty store")

    p = sub.add_parser("validate", help="validate documents against the store")
    p.add_argument("--level", choices=("grammar", "structural", "typed"), default="structural")
    p.add_argument("paths", nargs="+")

    p = sub.add_parser("flatten", help="list every constant of a theory")
    p.add_argument("theory")
    p.add_argument("--include-meta", action="store_true")

    p = sub.add_parser("deref", help="retrieve a document, module or declaration")
    p.add_argument("uri")
    p.add_argument("--self-contained", action="store_true", help="inline the one-step backward cone")
    p.add_argument("--revision", type=int)

    p = sub.add_parser("abox", help="print the ABox of a committed document")
    p.add_argument("doc")

    p = sub.add_parser("query", help="evaluate a relation expression")
    p.add_argument("start")
    p.add_argument("rel")

    p = sub.add_parser("cone", help="dependency cone of a module")
    direction = p.add_mutually_exclusive_group()
    direction.add_argument("--backward", dest="forward", action="store_false")
    direction.add_argument("--forward", dest="forward", action="store_true")
    p.add_argument("--one-step", action="store_true")
    p.add_argument("--emit-omdoc", action="store_true")
    p.add_argument("module")

    p = sub.add_parser("present", help="render an item")
    p.add_argument("uri")
    p.add_argument("--style", default=DEFAULT_STYLE_URI)
    p.add_argument("--format", dest="target", choices=("text", "html"), default="text")

    p = sub.add_parser("commit", help="validate and store documents as one revision")
    p.add_argument("paths", nargs="+")
    p.add_argument("-m", "--message", default="")
    p.add_argument("--author")

    p = sub.add_parser("rename", help="rename a module and patch its dependents")
    p.add_argument("module")
    p.add_argument("new_name")
    p.add_argument("--author")

    sub.add_parser("status", help="store revision and counters")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default=DEFAULT_HOST)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    return parser


def _write(answer, out):
    _, body = answer
    out.write(body)
    out.flush()


def _open_store(args):
    return DocumentStore(store_dir(args.store))


def _optional_store(args):
    try:
        return _open_store(args)
    except NotFound:
        return None


def serve(store, host=DEFAULT_HOST, port=DEFAULT_PORT):
    app = create_app(store)
    print("🌐 Starting MMT Theory Graph Service...")
    print(f"📡 Server will be available at: http://{host}:{port}")
    print(f"📚 Store: {store.root} (revision {store.revision})")
    print("📋 Endpoints:")
    for route in ("/deref?uri=", "/flatten?theory=", "/abox?doc=", "/query?start=&rel=", "/cone?module=",
                  "/present?uri=&style=&format=", "POST /commit", "POST /validate", "/status"):
        print(f"   {route}")
    print("🛑 Press Ctrl+C to stop")
    app.run(host=host, port=port, debug=False, threaded=True)


def run(args, out):
    fmt = args.output_format
    if args.command == "init":
        store = DocumentStore.init(store_dir(args.store))
        _write(status_answer(store, fmt), out)
        return EXIT_OK

    if args.command == "validate":
        report, answer = validate_answer(_optional_store(args), args.paths, args.level, fmt)
        _write(answer, out)
        return EXIT_OK if report.ok else EXIT_FAILURE

    store = _open_store(args)
    if args.command == "flatten":
        _write(flatten_answer(store, args.theory, args.include_meta, fmt), out)
    elif args.command == "deref":
        _write(deref_answer(store, args.uri, args.self_contained, args.revision), out)
    elif args.command == "abox":
        _write(abox_answer(store, args.doc), out)
    elif args.command == "query":
        _write(query_answer(store, args.start, args.rel, fmt), out)
    elif args.command == "cone":
        _write(cone_answer(store, args.module, args.forward, not args.one_step, args.emit_omdoc, fmt), out)
    elif args.command == "present":
        _write(present_answer(store, args.uri, args.style, args.target), out)
    elif args.command == "commit":
        _write(revision_answer(store.commit(args.paths, args.message, args.author), fmt), out)
    elif args.command == "rename":
        _write(revision_answer(store.rename_module(args.module, args.new_name, args.author), fmt), out)
    elif args.command == "status":
        _write(status_answer(store, fmt), out)
    elif args.command == "serve":
        serve(store, args.host, args.port)
    return EXIT_OK


def main(argv=None, out=None, err=None):
    out = out or sys.stdout.buffer
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=err)

    try:
        return run(args, out)
    except ValidationRejected as e:
        _write(report_answer(e.report, args.output_format), out)
        print(f"❌ {e.code}: {', '.join(e.report.codes())}", file=err)
        return EXIT_FAILURE
    except (MalformedUri, UnknownRelation) as e:
        print(f"❌ {e}", file=err)
        return EXIT_USAGE
    except MmtError as e:
        print(f"❌ {e}", file=err)
        return EXIT_FAILURE
    except OSError as e:
        print(f"❌ {e}", file=err)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
