#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Presentation
============

Notations are keyed by a URI prefix (``for``) and a role.  For an expression
with head E the applicable notations are those whose ``for`` is a prefix of
E; the longest one wins, ties go to the notation seen last (local style over
imported style, styles over theory notations).

Precedences decide bracketing: a child is wrapped in the parent's bracket
pair iff its output precedence is below what the parent requires at that
position.  Atoms never need brackets.
"""

import logging
import math
from dataclasses import dataclass

from lxml import etree

from abox import FactIndex, graph_abox
from cones import backward_cone
from errors import ImportCycle, NoApplicableNotation, NotFound, UnknownModule
from flatten import InducedConstant, deref
from model import (
    Apply, Bind, ConstAssign, Constant, Document, Import, Style, SymbolRef, Term, Theory, Var, View,
)
from reader import format_morphism
from uri import MmtUri, format_uri

logger = logging.getLogger(__name__)

TARGETS = ("text", "html")

_DEFAULT_BRACKETS = ("(", ")")


@dataclass(frozen=True)
class ResolvedStyle:
    """A style with its import closure flattened: lowest priority first"""
    uri: MmtUri
    notations: tuple


def resolve_style(graph, style_uri):
    order, visiting, done = [], set(), set()

    def visit(uri):
        if uri in done:
            return
        if uri in visiting:
            raise ImportCycle("style imports itself", uri=str(uri))
        style = graph.module(uri)
        if not isinstance(style, Style):
            raise NotFound("no such style", uri=str(uri))
        visiting.add(uri)
        for imported in style.imports:
            visit(imported)
        visiting.discard(uri)
        done.add(uri)
        order.append(style)

    visit(style_uri)
    return ResolvedStyle(style_uri, tuple(n for s in order for n in s.notations))


def _applies(notation, head):
    if notation.applies_to.doc == "":
        return True
    return head is not None and notation.applies_to.is_prefix_of(head)


def select_notation(style, head, role):
    """Longest applicable ``for``; later notations win ties"""
    notations = style.notations if hasattr(style, "notations") else style
    best, best_len = None, -1
    for n in notations:
        if n.role != role or not _applies(n, head):
            continue
        length = len(format_uri(n.applies_to)) if n.applies_to.doc else 0
        if length >= best_len:
            best, best_len = n, length
    if best is None:
        raise NoApplicableNotation(f"no {role} notation", uri=str(head) if head is not None else None)
    return best


# ---------------------------------------------------------------------------
# Layout tree shared by both targets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    text: str
    kind: str = "punct"   # sym | var | punct | space | text
    uri: MmtUri = None


@dataclass(frozen=True)
class Row:
    children: tuple


def _text(node):
    if isinstance(node, Leaf):
        return node.text
    return "".join(_text(c) for c in node.children)


def _html(node, parent=None):
    if isinstance(node, Leaf):
        if node.kind == "space":
            return None
        tag = {"sym": "mo", "var": "mi", "punct": "mo", "text": "mtext"}[node.kind]
        el = etree.Element(tag) if parent is None else etree.SubElement(parent, tag)
        if node.uri is not None:
            el.set("xref", format_uri(node.uri))
        el.text = node.text
        return el
    el = etree.Element("mrow") if parent is None else etree.SubElement(parent, "mrow")
    for child in node.children:
        _html(child, el)
    return el


def _space():
    return Leaf(" ", "space")


def _word(text):
    return Leaf(text, "text")


# ---------------------------------------------------------------------------
# Renderer
# ---------------------------------------------------------------------------

def _components(uri):
    return (uri.doc, str(uri.mod) if uri.mod is not None else "", "/".join(uri.sym.segments) if uri.sym else "")


class _Renderer:
    def __init__(self, notations):
        self.notations = notations

    def select(self, head, role):
        return select_notation(self.notations, head, role)

    def wrap(self, node, prec, required, brackets):
        if prec >= required:
            return node
        open_, close = brackets or _DEFAULT_BRACKETS
        return Row((Leaf(open_), node, Leaf(close)))

    def symbol(self, uri):
        n = self.select(uri, "constant")
        if n.operator is not None:
            text = n.operator
        else:
            parts = _components(uri)
            text = (n.separator or "?").join(parts[i] for i in (n.holes or (2,)) if 0 <= i < 3)
        return Leaf(text, "sym", uri)

    def operator(self, n, head):
        if n.operator is not None:
            uri = head.uri if isinstance(head, SymbolRef) else None
            return Leaf(n.operator, "sym", uri)
        node, _ = self.term(head, math.inf)
        return node

    def term(self, t, required=-math.inf):
        """(layout node, output precedence)"""
        if isinstance(t, SymbolRef):
            return self.symbol(t.uri), math.inf
        if isinstance(t, Var):
            return Leaf(t.name, "var"), math.inf
        if isinstance(t, Apply):
            return self.apply(t)
        return self.bind(t)

    def child(self, t, required, brackets):
        node, prec = self.term(t)
        return self.wrap(node, prec, required, brackets)

    def apply(self, t):
        head_uri = t.head.uri if isinstance(t.head, SymbolRef) else None
        n = self.select(head_uri, "application")
        args = [t.args[i - 1] for i in n.holes if 0 < i <= len(t.args)] if n.holes else list(t.args)
        op = self.operator(n, t.head)
        brackets = n.brackets

        if n.fixity == "infix" and len(args) >= 2:
            if n.assoc == "left":
                first, last = n.prec_in, n.prec_in + 1
            elif n.assoc == "right":
                first, last = n.prec_in + 1, n.prec_in
            else:
                first = last = n.prec_in + 1
            parts = []
            for k, a in enumerate(args):
                required = first if k == 0 else last if k == len(args) - 1 else n.prec_in + 1
                if k:
                    parts += [_space(), op, _space()]
                parts.append(self.child(a, required, brackets))
            return Row(tuple(parts)), n.prec_out

        if n.fixity == "name-only":
            return op, n.prec_out

        if n.separator is not None:
            # delimited argument list: f(a, b)
            open_, close = brackets or _DEFAULT_BRACKETS
            parts = [Leaf(open_)]
            for k, a in enumerate(args):
                if k:
                    parts.append(Leaf(n.separator))
                parts.append(self.child(a, -math.inf, brackets))
            parts.append(Leaf(close))
            row = [op] + parts if n.fixity == "prefix" else parts + [op]
            return Row(tuple(row)), n.prec_out

        # juxtaposition: - x   /   x !
        operands = []
        for a in args:
            operands += [self.child(a, n.prec_in, brackets), _space()]
        operands = operands[:-1]
        row = [op, _space()] + operands if n.fixity == "prefix" else operands + [_space(), op]
        return Row(tuple(row)), n.prec_out

    def bind(self, t):
        head_uri = t.binder.uri if isinstance(t.binder, SymbolRef) else None
        n = self.select(head_uri, "binder")
        parts = [self.operator(n, t.binder), _space()]
        for k, v in enumerate(t.vars):
            if k:
                parts.append(Leaf(n.separator if n.separator is not None else ","))
            parts.append(Leaf(v.name, "var"))
            if v.type is not None:
                parts += [_space(), Leaf(":"), _space(), self.child(v.type, n.prec_in + 1, n.brackets)]
        parts += [Leaf("."), _space(), self.child(t.body, -math.inf, n.brackets)]
        return Row(tuple(parts)), n.prec_out

    # declarations and modules ---------------------------------------------

    def keyword(self, uri, role, default):
        try:
            n = self.select(uri, role)
        except NoApplicableNotation:
            return default
        return n.operator or default

    def constant(self, c):
        parts = [Leaf(str(c.uri.sym), "sym", c.uri)]
        if c.type is not None:
            parts += [_space(), Leaf(":"), _space(), self.term(c.type)[0]]
        if c.definiens is not None:
            parts += [_space(), Leaf("="), _space(), self.term(c.definiens)[0]]
        return Row(tuple(parts))

    def assignment(self, a):
        target = Leaf(str(a.target), "sym", a.uri)
        if isinstance(a, ConstAssign):
            value = self.term(a.value)[0]
        else:
            value = _word(format_morphism(a.value))
        return Row((target, _space(), Leaf(":="), _space(), value))

    def lines(self, header, body):
        parts = [header]
        for node in body:
            parts += [Leaf("\n", "space"), _word("  "), node]
        return Row(tuple(parts))

    def module(self, m):
        if isinstance(m, Theory):
            header = [_word(self.keyword(m.uri, "theory", "theory")), _space(), Leaf(str(m.name), "sym", m.uri)]
            if m.meta is not None:
                header += [_space(), Leaf(":"), _space(), _word(format_uri(m.meta))]
            body = []
            for d in m.declarations:
                if isinstance(d, Constant):
                    body.append(self.constant(d))
                else:
                    body.append(self.import_(d))
            return self.lines(Row(tuple(header)), body)
        if isinstance(m, View):
            header = [_word(self.keyword(m.uri, "view", "view")), _space(), Leaf(str(m.name), "sym", m.uri),
                      _space(), Leaf(":"), _space(), _word(format_uri(m.domain)), _space(), Leaf("->"),
                      _space(), _word(format_uri(m.codomain))]
            return self.lines(Row(tuple(header)), [self.assignment(a) for a in m.assignments])
        header = [_word("style"), _space(), Leaf(str(m.name), "sym", m.uri)]
        return self.lines(Row(tuple(header)), [_word(f"{len(m.notations)} notation(s)")])

    def import_(self, d):
        head = Row((_word("include"), _space(), Leaf(str(d.name), "sym", d.uri), _space(), Leaf(":"),
                    _space(), _word(format_uri(d.domain))))
        if not d.assignments:
            return head
        return Row((head,) + tuple(x for a in d.assignments for x in (Leaf("\n", "space"), _word("    "),
                                                                       self.assignment(a))))

    def document(self, doc):
        header = Row((_word(self.keyword(doc.base, "document", "document")), _space(), _word(format_uri(doc.base))))
        return self.lines(header, [self.module(m) for m in doc.modules])

    def item(self, item):
        if isinstance(item, Term):
            return self.term(item)[0]
        if isinstance(item, (Constant, InducedConstant)):
            return self.constant(item)
        if isinstance(item, (Theory, View, Style)):
            return self.module(item)
        if isinstance(item, Document):
            return self.document(item)
        if isinstance(item, Import):
            return self.import_(item)
        if isinstance(item, ConstAssign) or hasattr(item, "target"):
            return self.assignment(item)
        return Row((_word(format_uri(item.uri)),))


def _item_modules(item):
    if isinstance(item, Term):
        return {s.module_uri for s in item.symbols()}
    if isinstance(item, Document):
        return {m.uri for m in item.modules}
    uri = item.uri
    return {uri.module_uri} if uri.mod is not None else set()


def cone_notations(graph, modules):
    """Theory notations of every theory in the backward cones of ``modules``"""
    index = graph.cache.get("present-index")
    if index is None:
        index = graph.cache.setdefault("present-index", FactIndex(graph_abox(graph)))
    members = set()
    for m in modules:
        try:
            members |= backward_cone(index, m)
        except UnknownModule:
            continue
    notations = []
    for uri in sorted(members, key=format_uri):
        module = graph.module(uri)
        if isinstance(module, Theory):
            notations.extend(module.notations)
    return notations


def render(graph, style, item, target="text", notations=None):
    """Render a term, a URI or a deref result to text or html.

    ``notations`` overrides the theory notations otherwise collected from the
    backward cone of the item.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    if isinstance(style, MmtUri):
        style = resolve_style(graph, style)
    elif isinstance(style, Style):
        style = resolve_style(graph, style.uri) if graph.module(style.uri) is not None else \
            ResolvedStyle(style.uri, style.notations)

    if isinstance(item, MmtUri):
        found = deref(graph, item)
        if found is None:
            raise NotFound("nothing to render", uri=str(item))
        item = found
    if notations is None:
        notations = cone_notations(graph, _item_modules(item))

    node = _Renderer(tuple(notations) + tuple(style.notations)).item(item)
    if target == "text":
        return _text(node)
    return etree.tostring(_html(node), encoding="unicode")
