#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Web Server for the Theory Graph Store
=====================================

Read access (deref, flatten, abox, query, cone, present, status) and validated
writes (commit, validate) over a DocumentStore.  Bodies are the same bytes
the command line prints in ``--format=xml`` / ``--format=lines`` mode.
"""

import logging
import os
import shutil
import tempfile

from flask import Flask, Response, request
from flask_cors import CORS

from config import DEFAULT_HOST, DEFAULT_PORT, DEFAULT_STYLE_URI, store_dir
from errors import (
    MalformedUri, MmtError, NameClash, NotFound, RevisionUnknown, UnknownModule, UnknownRelation,
    ValidationRejected,
)
from service import (
    OUTPUT_FORMATS, TEXT, abox_answer, cone_answer, deref_answer, flatten_answer, present_answer,
    query_answer, report_answer, revision_answer, status_answer, validate_answer,
)
from store import DocumentStore

logger = logging.getLogger(__name__)

STATUS_CODES = {
    NotFound: 404,
    UnknownModule: 404,
    RevisionUnknown: 404,
    MalformedUri: 400,
    UnknownRelation: 400,
    ValidationRejected: 409,
    NameClash: 409,
}


def _status_for(error):
    for cls, status in STATUS_CODES.items():
        if isinstance(error, cls):
            return status
    return 400


def _respond(answer, status=200):
    content_type, body = answer
    return Response(body, status=status, content_type=content_type)


def _error(error, output_format):
    if isinstance(error, ValidationRejected):
        return _respond(report_answer(error.report, output_format), 409)
    return _respond((TEXT, f"{error}\n".encode("utf-8")), _status_for(error))


def _internal(error):
    logger.error("Request failed: %s", error, exc_info=True)
    return _respond((TEXT, f"InternalError: {error}\n".encode("utf-8")), 500)


def _flag(name):
    return request.args.get(name, "false").lower() in ("1", "true", "yes")


def _format(default):
    fmt = request.args.get("format", default)
    return fmt if fmt in OUTPUT_FORMATS else default


def _required(name):
    value = request.args.get(name)
    if value is None:
        raise MalformedUri(f"missing query parameter {name!r}")
    return value


def create_app(store):
    """Flask app serving ``store``"""
    app = Flask(__name__)
    CORS(app)
    app.config["STORE"] = store

    @app.route("/deref", methods=["GET"])
    def get_deref():
        """Document, module or declaration by URI"""
        try:
            revision = request.args.get("revision")
            if revision is not None and not revision.isdigit():
                raise MalformedUri(f"revision must be a number, got {revision!r}")
            at = int(revision) if revision is not None else None
            return _respond(deref_answer(store, _required("uri"), _flag("self-contained"), at))
        except MmtError as e:
            return _error(e, "xml")
        except Exception as e:
            return _internal(e)

    @app.route("/flatten", methods=["GET"])
    def get_flatten():
        """Every constant of a theory, declared and induced"""
        fmt = _format("xml")
        try:
            return _respond(flatten_answer(store, _required("theory"), _flag("include-meta"), fmt))
        except MmtError as e:
            return _error(e, fmt)
        except Exception as e:
            return _internal(e)

    @app.route("/abox", methods=["GET"])
    def get_abox():
        try:
            return _respond(abox_answer(store, _required("doc")))
        except MmtError as e:
            return _error(e, "lines")
        except Exception as e:
            return _internal(e)

    @app.route("/query", methods=["GET"])
    def get_query():
        fmt = _format("lines")
        try:
            return _respond(query_answer(store, _required("start"), _required("rel"), fmt))
        except MmtError as e:
            return _error(e, fmt)
        except Exception as e:
            return _internal(e)

    @app.route("/cone", methods=["GET"])
    def get_cone():
        fmt = _format("lines")
        try:
            answer = cone_answer(
                store, _required("module"),
                forward=request.args.get("direction", "backward") == "forward",
                transitive=not _flag("one-step"),
                emit_omdoc=_flag("emit-omdoc"),
                output_format=fmt,
            )
            return _respond(answer)
        except MmtError as e:
            return _error(e, fmt)
        except Exception as e:
            return _internal(e)

    @app.route("/present", methods=["GET"])
    def get_present():
        try:
            target = request.args.get("format", "text")
            if target not in ("text", "html"):
                target = "text"
            style = request.args.get("style", DEFAULT_STYLE_URI)
            return _respond(present_answer(store, _required("uri"), style, target))
        except MmtError as e:
            return _error(e, "lines")
        except Exception as e:
            return _internal(e)

    @app.route("/commit", methods=["POST"])
    def post_commit():
        """Multipart upload of one or more documents, committed as one revision"""
        fmt = _format("lines")
        try:
            sources = [(f.filename or name, f.read()) for name, f in request.files.items(multi=True)]
            if not sources:
                raise MalformedUri("no documents uploaded")
            revision = store.commit(sources, request.form.get("message", ""), request.form.get("author"))
            return _respond(revision_answer(revision, fmt))
        except MmtError as e:
            return _error(e, fmt)
        except Exception as e:
            return _internal(e)

    @app.route("/validate", methods=["POST"])
    def post_validate():
        fmt = _format("lines")
        level = request.args.get("level", "structural")
        tmp = tempfile.mkdtemp(prefix="mmt-validate-")
        try:
            paths = []
            for k, (_, f) in enumerate(request.files.items(multi=True)):
                path = os.path.join(tmp, f"{k}-{os.path.basename(f.filename or 'upload.omdoc')}")
                f.save(path)
                paths.append(path)
            report, answer = validate_answer(store, paths, level, fmt)
            return _respond(answer, 200 if report.ok else 409)
        except (MmtError, ValueError) as e:
            return _respond((TEXT, f"{e}\n".encode("utf-8")), 400)
        except Exception as e:
            return _internal(e)
        finally:
            shutil.rmtree(tmp, ignore_errors=True)

    @app.route("/status", methods=["GET"])
    def get_status():
        """Store revision and counters"""
        try:
            return _respond(status_answer(store, _format("lines")))
        except Exception as e:
            return _internal(e)

    @app.route("/", methods=["GET"])
    def home():
        return """
    <h1>MMT Theory Graph Service</h1>
    <p>Modular theory graph store with validated commits</p>
    <ul>
        <li>GET /deref?uri=...&amp;self-contained=true - document, module or declaration</li>
        <li>GET /flatten?theory=...&amp;include-meta=true - flattened theory</li>
        <li>GET /abox?doc=... - ABox of a document</li>
        <li>GET /query?start=...&amp;rel=... - relation query</li>
        <li>GET /cone?module=...&amp;direction=forward|backward&amp;one-step=true - dependency cone</li>
        <li>GET /present?uri=...&amp;style=...&amp;format=text|html - rendering</li>
        <li>POST /commit - multipart documents</li>
        <li>POST /validate?level=... - multipart documents</li>
        <li><a href="/status">GET /status</a> - store status</li>
    </ul>
    """

    return app


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    store = DocumentStore(store_dir())
    print("🌐 Starting MMT Theory Graph Service...")
    print(f"📡 Server will be available at: http://{DEFAULT_HOST}:{DEFAULT_PORT}")
    print("🛑 Press Ctrl+C to stop")
    create_app(store).run(host=DEFAULT_HOST, port=DEFAULT_PORT, debug=False, threaded=True)
