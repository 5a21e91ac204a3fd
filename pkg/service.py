#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Shared Request Handlers
=======================

Every answer the command line and the HTTP service give is produced here,
as ``(content_type, body_bytes)``, so both surfaces return identical bytes
for the same logical request.
"""

import functools
import logging

from lxml import etree

from checker import foundations_from_config, validate_paths
from cones import cone_element, self_contained
from config import DEFAULT_STYLE_PATH, DEFAULT_STYLE_URI
from errors import NotFound
from flatten import flatten_theory
from model import Theory
from present import render
from reader import item_element, read_document, serialize_element, serialize_item
from uri import as_uri, format_uri

logger = logging.getLogger(__name__)

XML = "text/xml; charset=utf-8"
TEXT = "text/plain; charset=utf-8"
HTML = "text/html; charset=utf-8"

OUTPUT_FORMATS = ("lines", "xml")


def _reads_store(answer):
    """Run an answer inside the store's read side, so a commit never lands halfway through it"""
    @functools.wraps(answer)
    def wrapper(store, *args, **kwargs):
        if store is None:
            return answer(store, *args, **kwargs)
        with store.reading():
            return answer(store, *args, **kwargs)
    return wrapper


def _lines(values):
    return "".join(f"{v}\n" for v in values).encode("utf-8")


def _uri_list(tag, uris, output_format, **attrs):
    ordered = sorted(format_uri(u) for u in uris)
    if output_format == "lines":
        return TEXT, _lines(ordered)
    root = etree.Element(tag, **{k: str(v) for k, v in attrs.items()})
    for u in ordered:
        etree.SubElement(root, "uri").text = u
    return XML, serialize_element(root)


@_reads_store
def deref_answer(store, uri, self_contained_cone=False, at=None):
    uri = as_uri(uri)
    if self_contained_cone and uri.is_module:
        members = store.cone(uri, forward=False, transitive=False)
        graph = store.graph_for([uri], at)
        return XML, serialize_element(cone_element(self_contained(graph, members)))
    item = store.retrieve(uri, at)
    if isinstance(item, bytes):
        return XML, item
    return XML, serialize_item(item)


@_reads_store
def flatten_answer(store, theory, include_meta=False, output_format="xml"):
    theory = as_uri(theory)
    graph = store.graph_for([theory])
    if not isinstance(graph.module(theory), Theory):
        raise NotFound("not a committed theory", uri=str(theory))
    items = flatten_theory(graph, theory, include_meta)
    if output_format == "lines":
        return TEXT, _lines(format_uri(i.uri) for i in items)
    root = etree.Element("flat", theory=format_uri(theory), size=str(len(items)))
    for item in items:
        root.append(item_element(item))
    return XML, serialize_element(root)


@_reads_store
def abox_answer(store, doc):
    return TEXT, store.abox(str(as_uri(doc))).encode("utf-8")


@_reads_store
def query_answer(store, start, expr, output_format="lines"):
    start = as_uri(start)
    result = store.query(start, expr)
    return _uri_list("query", result, output_format, start=format_uri(start), rel=expr)


@_reads_store
def cone_answer(store, module, forward=False, transitive=True, emit_omdoc=False, output_format="lines"):
    module = as_uri(module)
    members = store.cone(module, forward, transitive)
    if emit_omdoc:
        graph = store.graph_for(members)
        return XML, serialize_element(cone_element(self_contained(graph, members)))
    direction = "forward" if forward else "backward"
    return _uri_list("cone", members, output_format, module=format_uri(module), direction=direction,
                     transitive="true" if transitive else "false")


@_reads_store
def present_answer(store, uri, style=DEFAULT_STYLE_URI, target="text"):
    uri, style = as_uri(uri), as_uri(style)
    graph = store.graph_for([uri.module_uri, style.module_uri])
    if graph.module(style) is None and format_uri(style) == DEFAULT_STYLE_URI:
        graph.add_document(read_document(DEFAULT_STYLE_PATH))
    text = render(graph, style, uri, target)
    return (TEXT if target == "text" else HTML), (text + "\n").encode("utf-8")


def report_answer(report, output_format="lines"):
    if output_format == "xml":
        return XML, serialize_element(report.to_element())
    return TEXT, report.to_lines().encode("utf-8")


@_reads_store
def validate_answer(store, paths, level="structural", output_format="lines"):
    """Validate files; committed documents of ``store`` (if any) form the context"""
    context = graph = None
    plugins = ()
    if store is not None:
        context = store.index()
        plugins = foundations_from_config(store.config)
        if level == "typed":
            graph = store.graph()
    report = validate_paths(paths, level, context, graph, plugins)
    return report, report_answer(report, output_format)


def revision_answer(revision, output_format="lines"):
    if output_format == "lines":
        return TEXT, _lines([f"revision {revision.number}"] + list(revision.changed))
    root = etree.Element("revision", number=str(revision.number), timestamp=revision.timestamp,
                         author=revision.author)
    if revision.message:
        etree.SubElement(root, "message").text = revision.message
    for doc in revision.changed:
        etree.SubElement(root, "changed", uri=doc)
    return XML, serialize_element(root)


@_reads_store
def status_answer(store, output_format="lines"):
    status = store.status()
    if output_format == "lines":
        return TEXT, _lines(f"{k} {v}" for k, v in sorted(status.items()))
    root = etree.Element("status", **{k: str(v).lower() if isinstance(v, bool) else str(v)
                                      for k, v in sorted(status.items())})
    return XML, serialize_element(root)
