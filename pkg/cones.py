#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Dependency Cones
================

backward cone of M: the modules M needs (M plus DependsOn successors)
forward cone of M:  the modules needing M (M plus DependsOn predecessors)

Both read nothing but the DependsOn entries of an index and the set of
module individuals it describes.
"""

import logging

from lxml import etree

from abox import FactIndex, as_index, graph_abox
from errors import UnknownModule
from model import Document
from reader import write_module
from uri import format_uri

logger = logging.getLogger(__name__)


def _cone(facts, module, transitive, forward):
    index = as_index(facts)
    modules = index.modules()
    if module not in modules:
        raise UnknownModule("not a module of the fact set", uri=str(module))

    step = index.subjects if forward else index.objects
    result = {module}
    frontier = {module}
    while frontier:
        reached = set()
        for node in frontier:
            reached |= step("DependsOn", node)
        frontier = (reached & modules) - result
        result |= frontier
        if not transitive:
            break
    logger.debug("%s cone of %s: %d modules", "forward" if forward else "backward", module, len(result))
    return result


def backward_cone(facts, module, transitive=True):
    return _cone(facts, module, transitive, forward=False)


def forward_cone(facts, module, transitive=True):
    return _cone(facts, module, transitive, forward=True)


def _dependency_order(graph, members):
    """Members sorted so that every module follows the modules it depends on"""
    index = FactIndex(graph_abox(graph))
    pending = sorted(members, key=format_uri)
    done, ordered = set(), []
    while pending:
        ready = [m for m in pending if (index.objects("DependsOn", m) & set(members)) <= done | {m}]
        if not ready:
            ready = pending[:1]
        for m in ready:
            done.add(m)
            ordered.append(m)
        pending = [m for m in pending if m not in done]
    return ordered


def self_contained(graph, members):
    """Documents holding exactly the cone members, dependencies first"""
    documents = {}
    for uri in _dependency_order(graph, members):
        module = graph.module(uri)
        if module is None:
            continue
        documents.setdefault(uri.doc, []).append(module)

    result = []
    for doc, modules in documents.items():
        source = graph.documents.get(doc)
        position = {m.uri: k for k, m in enumerate(source.modules)} if source is not None else {}
        modules.sort(key=lambda m: position.get(m.uri, 0))
        result.append(Document(modules[0].uri.doc_uri, tuple(modules)))
    return result


def cone_element(documents):
    """``<cone>`` wrapping one ``<omdoc>`` per document"""
    root = etree.Element("cone")
    for doc in documents:
        el = etree.SubElement(root, "omdoc", base=format_uri(doc.base))
        for module in doc.modules:
            write_module(el, module)
    return root
