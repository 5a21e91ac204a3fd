#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
OMDoc-lite Reader and Writer
============================

Concrete XML syntax for documents, terms, morphisms and notations:

    omdoc[@base]
      theory[@name,@meta?]      constant[@name] (type?, definition?)
                                import[@name,@from] assign*
                                notation[...]
      view[@name,@from,@to]     assign*
      style[@name]              import[@from], notation[...]
    assign[@symbol|@import]     term child, or @morphism
    terms                       OMS[@path] OMV[@name] OMA OMBIND(binder, OMBVAR, body)

The grammar is checked while parsing (there is no separate schema engine);
every error points at the offending element.
"""

import logging
import re
from dataclasses import dataclass

from lxml import etree

from errors import GrammarError, MalformedUri, MmtError
from model import (
    Apply, Bind, Compose, ConstAssign, Constant, Document, Identity, Import, ImportAssign,
    ImportLink, Notation, Style, SymbolRef, Theory, Var, VarDecl, View, ViewLink,
)
from uri import LocalName, MmtUri, format_uri, parse_uri, relativize, resolve_relative

logger = logging.getLogger(__name__)

ROLES = ("constant", "application", "binder", "theory", "view", "document")
FIXITIES = ("prefix", "infix", "postfix", "name-only")
ASSOCIATIVITIES = ("left", "right", "none")

_ENCODING_RE = re.compile(rb"""^\s*<\?xml[^>]*encoding\s*=\s*["']([A-Za-z0-9._-]+)["']""")

_ALLOWED_ATTRS = {
    "omdoc": {"base"},
    "theory": {"name", "meta"},
    "constant": {"name"},
    "import": {"name", "from"},
    "view": {"name", "from", "to"},
    "assign": {"symbol", "import", "morphism"},
    "style": {"name"},
    "notation": {"name", "for", "role", "fixity", "operator", "prec-in", "prec-out",
                 "assoc", "brackets", "separator", "holes"},
    "type": set(),
    "definition": set(),
    "OMS": {"path"},
    "OMV": {"name"},
    "OMA": set(),
    "OMBIND": set(),
    "OMBVAR": set(),
}

TERM_TAGS = ("OMS", "OMV", "OMA", "OMBIND")


@dataclass(frozen=True)
class SourceRef:
    path: str
    line: int
    column: int = 0
    end_column: int = 0

    def __str__(self):
        return f"{self.path or '<input>'}:{self.line}:{self.column}-{self.end_column}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, path, text):
        self.path = path
        self.lines = text.split("\n")

    def source(self, el):
        line = el.sourceline or 0
        column = end = 0
        if 0 < line <= len(self.lines):
            text = self.lines[line - 1]
            start = text.find("<" + el.tag)
            if start >= 0:
                close = text.find(">", start)
                column = start + 1
                end = (close + 1) if close >= 0 else len(text)
        return SourceRef(self.path, line, column, end)

    def fail(self, el, message):
        raise GrammarError(message, source=self.source(el))

    def check(self, el, tag=None):
        if not isinstance(el.tag, str):
            self.fail(el, "unexpected node")
        if tag is not None and el.tag != tag:
            self.fail(el, f"expected <{tag}>, found <{el.tag}>")
        allowed = _ALLOWED_ATTRS.get(el.tag)
        if allowed is None:
            self.fail(el, f"unknown element <{el.tag}>")
        for name in el.attrib:
            if name not in allowed:
                self.fail(el, f"unknown attribute {name!r} on <{el.tag}>")
        if el.text and el.text.strip():
            self.fail(el, f"unexpected text in <{el.tag}>")
        for child in el:
            if child.tail and child.tail.strip():
                self.fail(child, f"unexpected text after <{child.tag}>")

    def attr(self, el, name):
        value = el.get(name)
        if value is None:
            self.fail(el, f"<{el.tag}> lacks required attribute {name!r}")
        return value

    def uri_attr(self, el, name, base, required=True):
        value = el.get(name) if not required else self.attr(el, name)
        if value is None:
            return None
        try:
            return resolve_relative(base, value)
        except MmtError as e:
            raise type(e)(e.message, source=self.source(el))

    def name_attr(self, el, name="name", single=False):
        text = self.attr(el, name)
        try:
            local = LocalName.parse(text)
        except MalformedUri as e:
            raise GrammarError(f"bad {name} {text!r}: {e.message}", source=self.source(el))
        if single and len(local) != 1:
            self.fail(el, f"{name} {text!r} must be a single segment")
        return local

    def int_attr(self, el, name):
        text = self.attr(el, name)
        try:
            return int(text)
        except ValueError:
            self.fail(el, f"{name} must be an integer, got {text!r}")

    # documents -------------------------------------------------------------

    def document(self, root, expected_base):
        self.check(root, "omdoc")
        text = root.get("base")
        if text is None and expected_base is None:
            self.fail(root, "<omdoc> lacks required attribute 'base'")
        try:
            base = parse_uri(text) if text is not None else expected_base
        except MalformedUri as e:
            raise MalformedUri(e.message, source=self.source(root))
        if not base.is_document or not base.doc:
            self.fail(root, f"document base must be an absolute document URI, got {text!r}")
        if expected_base is not None and base != expected_base:
            self.fail(root, f"document base {base} differs from expected {expected_base}")

        modules = []
        for el in root:
            if el.tag == "theory":
                modules.append(self.theory(el, base))
            elif el.tag == "view":
                modules.append(self.view(el, base))
            elif el.tag == "style":
                modules.append(self.style(el, base))
            else:
                self.check(el)
                self.fail(el, f"<{el.tag}> not allowed in <omdoc>")
        return Document(base, tuple(modules), source=self.source(root))

    def theory(self, el, base):
        self.check(el)
        uri = MmtUri(base.doc, self.name_attr(el))
        meta = self.uri_attr(el, "meta", uri, required=False)
        decls, notations = [], []
        for child in el:
            if child.tag == "constant":
                decls.append(self.constant(child, uri))
            elif child.tag == "import":
                decls.append(self.import_(child, uri))
            elif child.tag == "notation":
                notations.append(self.notation(child, uri, len(notations) + 1))
            else:
                self.check(child)
                self.fail(child, f"<{child.tag}> not allowed in <theory>")
        return Theory(uri, meta, tuple(decls), tuple(notations), source=self.source(el))

    def constant(self, el, theory):
        self.check(el)
        uri = theory / self.name_attr(el)
        type_ = definiens = None
        for child in el:
            if child.tag == "type" and type_ is None and definiens is None:
                type_ = self.wrapped_term(child, uri)
            elif child.tag == "definition" and definiens is None:
                definiens = self.wrapped_term(child, uri)
            else:
                self.check(child)
                self.fail(child, f"<{child.tag}> not allowed here in <constant>")
        return Constant(uri, type_, definiens, source=self.source(el))

    def import_(self, el, theory):
        self.check(el)
        uri = theory / self.name_attr(el, single=True)
        domain = self.uri_attr(el, "from", theory)
        assignments = [self.assign(child, uri, uri) for child in el]
        return Import(uri, domain, tuple(assignments), source=self.source(el))

    def view(self, el, base):
        self.check(el)
        uri = MmtUri(base.doc, self.name_attr(el))
        domain = self.uri_attr(el, "from", uri)
        codomain = self.uri_attr(el, "to", uri)
        assignments = [self.assign(child, uri, uri) for child in el]
        return View(uri, domain, codomain, tuple(assignments), source=self.source(el))

    def assign(self, el, container, base):
        self.check(el, "assign")
        has_symbol, has_import = el.get("symbol") is not None, el.get("import") is not None
        if has_symbol == has_import:
            self.fail(el, "<assign> needs exactly one of 'symbol' or 'import'")
        if has_symbol:
            target = self.name_attr(el, "symbol")
            if el.get("morphism") is not None or len(el) != 1:
                self.fail(el, "symbol assignment needs exactly one term child")
            value = self.term(el[0], base)
            return ConstAssign(container / target, target, value, source=self.source(el))

        target = self.name_attr(el, "import")
        if len(el) != 0:
            self.fail(el, "import assignment takes a 'morphism' attribute, not children")
        try:
            value = parse_morphism(self.attr(el, "morphism"), base)
        except MmtError as e:
            raise type(e)(e.message, source=self.source(el))
        return ImportAssign(container / target, target, value, source=self.source(el))

    def style(self, el, base):
        self.check(el)
        uri = MmtUri(base.doc, self.name_attr(el))
        imports, notations = [], []
        for child in el:
            if child.tag == "import":
                self.check(child)
                if child.get("name") is not None:
                    self.fail(child, "style imports are unnamed")
                imports.append(self.uri_attr(child, "from", uri))
            elif child.tag == "notation":
                notations.append(self.notation(child, uri, len(notations) + 1))
            else:
                self.check(child)
                self.fail(child, f"<{child.tag}> not allowed in <style>")
        return Style(uri, tuple(imports), tuple(notations), source=self.source(el))

    def notation(self, el, container, position):
        self.check(el, "notation")
        if len(el):
            self.fail(el[0], "<notation> has no children")
        name = self.name_attr(el) if el.get("name") is not None else LocalName.of(f"n{position}")
        target = self.attr(el, "for")
        if target == "":
            applies_to = MmtUri("")
        else:
            applies_to = self.uri_attr(el, "for", container)

        role = self.attr(el, "role")
        if role not in ROLES:
            self.fail(el, f"unknown role {role!r}")
        fixity = self.attr(el, "fixity")
        if fixity not in FIXITIES:
            self.fail(el, f"unknown fixity {fixity!r}")
        assoc = el.get("assoc", "left")
        if assoc not in ASSOCIATIVITIES:
            self.fail(el, f"unknown associativity {assoc!r}")

        brackets = None
        if el.get("brackets") is not None:
            parts = el.get("brackets").split()
            if len(parts) != 2:
                self.fail(el, "brackets must be two space-separated snippets")
            brackets = tuple(parts)

        holes = None
        if el.get("holes") is not None:
            try:
                holes = tuple(int(h) for h in el.get("holes").split())
            except ValueError:
                self.fail(el, "holes must be space-separated integers")
        if fixity == "infix" and holes is not None and len(holes) != 2:
            self.fail(el, "infix notations take exactly 2 holes")
        if fixity == "name-only" and holes:
            self.fail(el, "name-only notations take no holes")

        return Notation(
            uri=container / name,
            applies_to=applies_to,
            role=role,
            fixity=fixity,
            prec_in=self.int_attr(el, "prec-in"),
            prec_out=self.int_attr(el, "prec-out"),
            operator=el.get("operator"),
            separator=el.get("separator"),
            brackets=brackets,
            assoc=assoc,
            holes=holes,
            source=self.source(el),
        )

    # terms -----------------------------------------------------------------

    def wrapped_term(self, el, base):
        self.check(el)
        if len(el) != 1:
            self.fail(el, f"<{el.tag}> must contain exactly one term")
        return self.term(el[0], base)

    def term(self, el, base):
        if not isinstance(el.tag, str) or el.tag not in TERM_TAGS:
            self.check(el)
            self.fail(el, f"<{el.tag}> is not a term")
        self.check(el)
        src = self.source(el)
        if el.tag == "OMS":
            if len(el):
                self.fail(el, "<OMS> has no children")
            return SymbolRef(self.uri_attr(el, "path", base), source=src)
        if el.tag == "OMV":
            if len(el):
                self.fail(el, "<OMV> has no children outside <OMBVAR>")
            return Var(self.attr(el, "name"), source=src)
        if el.tag == "OMA":
            if len(el) < 2:
                self.fail(el, "<OMA> needs a head and at least one argument")
            terms = [self.term(child, base) for child in el]
            return Apply(terms[0], tuple(terms[1:]), source=src)

        if len(el) != 3 or el[1].tag != "OMBVAR":
            self.fail(el, "<OMBIND> needs binder, <OMBVAR> and body")
        binder = self.term(el[0], base)
        self.check(el[1])
        decls = []
        for v in el[1]:
            self.check(v, "OMV")
            if len(v) > 1:
                self.fail(v, "a bound variable has at most one type")
            var_type = self.term(v[0], base) if len(v) else None
            decls.append(VarDecl(self.attr(v, "name"), var_type))
        if not decls:
            self.fail(el[1], "<OMBVAR> needs at least one variable")
        if len({d.name for d in decls}) != len(decls):
            self.fail(el[1], "bound variable names must be distinct")
        body = self.term(el[2], base)
        return Bind(binder, tuple(decls), body, source=src)


def _check_encoding(data, path):
    declared = _ENCODING_RE.match(data)
    if declared and declared.group(1).decode("ascii").lower().replace("_", "-") not in ("utf-8", "utf8"):
        raise GrammarError(f"encoding {declared.group(1).decode()} not supported, use UTF-8",
                           source=SourceRef(path, 1))
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[:e.start].count(b"\n") + 1
        raise GrammarError("input is not valid UTF-8", source=SourceRef(path, line))


def parse_document(data, base=None, path=None):
    """Parse UTF-8 OMDoc-lite bytes into a Document with absolute URIs"""
    if isinstance(data, str):
        data = data.encode("utf-8")
    text = _check_encoding(data, path)
    parser = etree.XMLParser(resolve_entities=False, no_network=True, remove_comments=True,
                             remove_pis=True)
    try:
        root = etree.fromstring(data, parser)
    except etree.XMLSyntaxError as e:
        line, column = e.position if e.position else (0, 0)
        raise GrammarError(f"not well-formed XML: {e.msg}", source=SourceRef(path, line, column, column))
    return _Parser(path, text).document(root, base)


def read_document(path, base=None):
    with open(path, "rb") as f:
        data = f.read()
    return parse_document(data, base, path=str(path))


# ---------------------------------------------------------------------------
# Morphism attribute syntax
# ---------------------------------------------------------------------------

def parse_morphism(text, base):
    """``a ; b`` composes left to right; ``id(T)``; ``T?i1/…/in``; ``V``"""
    parts = [p.strip() for p in text.split(";")]
    if not parts or any(p == "" for p in parts):
        raise MalformedUri(f"bad morphism expression {text!r}")

    result = None
    for part in parts:
        if part.startswith("id(") and part.endswith(")"):
            m = Identity(resolve_relative(base, part[3:-1].strip()))
        else:
            u = resolve_relative(base, part)
            if u.sym is not None:
                m = ImportLink(u.module_uri, u.sym)
            elif u.mod is not None:
                m = ViewLink(u)
            else:
                raise MalformedUri(f"morphism {part!r} names a document, not a module")
        result = m if result is None else Compose(result, m)
    return result


def format_morphism(m, base=None):
    if isinstance(m, Identity):
        return f"id({relativize(m.theory, base)})"
    if isinstance(m, ImportLink):
        return relativize(m.theory.with_sym(m.path), base)
    if isinstance(m, ViewLink):
        return relativize(m.uri, base)
    return f"{format_morphism(m.first, base)} ; {format_morphism(m.second, base)}"


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _ref(u, base):
    return relativize(u, base) if base is not None else format_uri(u)


def write_term(parent, t, base=None):
    if isinstance(t, SymbolRef):
        return etree.SubElement(parent, "OMS", path=_ref(t.uri, base))
    if isinstance(t, Var):
        return etree.SubElement(parent, "OMV", name=t.name)
    if isinstance(t, Apply):
        el = etree.SubElement(parent, "OMA")
        write_term(el, t.head, base)
        for a in t.args:
            write_term(el, a, base)
        return el
    el = etree.SubElement(parent, "OMBIND")
    write_term(el, t.binder, base)
    bvar = etree.SubElement(el, "OMBVAR")
    for v in t.vars:
        var_el = etree.SubElement(bvar, "OMV", name=v.name)
        if v.type is not None:
            write_term(var_el, v.type, base)
    write_term(el, t.body, base)
    return el


def _write_constant(parent, c, base, name=None, extra=()):
    el = etree.SubElement(parent, "constant")
    el.set("name", name or str(c.uri.sym))
    for key, value in extra:
        el.set(key, value)
    if c.type is not None:
        write_term(etree.SubElement(el, "type"), c.type, base)
    if c.definiens is not None:
        write_term(etree.SubElement(el, "definition"), c.definiens, base)
    return el


def _write_assign(parent, a, base):
    el = etree.SubElement(parent, "assign")
    if isinstance(a, ConstAssign):
        el.set("symbol", str(a.target))
        write_term(el, a.value, base)
    else:
        el.set("import", str(a.target))
        el.set("morphism", format_morphism(a.value, base))
    return el


def _write_notation(parent, n, position, base):
    el = etree.SubElement(parent, "notation")
    if str(n.uri.sym) != f"n{position}":
        el.set("name", str(n.uri.sym))
    el.set("for", "" if n.applies_to.doc == "" else _ref(n.applies_to, base))
    el.set("role", n.role)
    el.set("fixity", n.fixity)
    if n.operator is not None:
        el.set("operator", n.operator)
    el.set("prec-in", str(n.prec_in))
    el.set("prec-out", str(n.prec_out))
    if n.assoc != "left":
        el.set("assoc", n.assoc)
    if n.brackets is not None:
        el.set("brackets", " ".join(n.brackets))
    if n.separator is not None:
        el.set("separator", n.separator)
    if n.holes is not None:
        el.set("holes", " ".join(str(h) for h in n.holes))
    return el


def write_module(parent, module, relative=True):
    """Append a theory/view/style element; URIs relative to the module when asked"""
    base = module.uri if relative else None
    if isinstance(module, Theory):
        el = etree.SubElement(parent, "theory", name=str(module.name))
        if module.meta is not None:
            el.set("meta", _ref(module.meta, base))
        for decl in module.declarations:
            decl_base = decl.uri if relative else None
            if isinstance(decl, Constant):
                _write_constant(el, decl, decl_base)
            else:
                imp = etree.SubElement(el, "import", name=str(decl.name))
                imp.set("from", _ref(decl.domain, base))
                for a in decl.assignments:
                    _write_assign(imp, a, decl_base)
        for k, n in enumerate(module.notations, 1):
            _write_notation(el, n, k, base)
        return el

    if isinstance(module, View):
        el = etree.SubElement(parent, "view", name=str(module.name))
        el.set("from", _ref(module.domain, base))
        el.set("to", _ref(module.codomain, base))
        for a in module.assignments:
            _write_assign(el, a, base)
        return el

    el = etree.SubElement(parent, "style", name=str(module.name))
    for imported in module.imports:
        etree.SubElement(el, "import").set("from", _ref(imported, base))
    for k, n in enumerate(module.notations, 1):
        _write_notation(el, n, k, base)
    return el


def _to_bytes(root):
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8")


def serialize_document(doc):
    """Canonical UTF-8 bytes: fixed attribute order, two-space indent, LF"""
    root = etree.Element("omdoc", base=format_uri(doc.base))
    for module in doc.modules:
        write_module(root, module)
    return _to_bytes(root)


def item_element(item):
    """Standalone element for a deref result, all URIs absolute"""
    holder = etree.Element("holder")
    if isinstance(item, (Theory, View, Style)):
        el = write_module(holder, item, relative=False)
        el.set("uri", format_uri(item.uri))
    elif isinstance(item, Document):
        el = etree.SubElement(holder, "omdoc", base=format_uri(item.base))
        for module in item.modules:
            write_module(el, module)
    elif isinstance(item, Import):
        el = etree.SubElement(holder, "import", name=str(item.name))
        el.set("from", format_uri(item.domain))
        el.set("uri", format_uri(item.uri))
        for a in item.assignments:
            _write_assign(el, a, None)
    elif isinstance(item, (ConstAssign, ImportAssign)):
        el = _write_assign(holder, item, None)
        el.set("uri", format_uri(item.uri))
    elif isinstance(item, Notation):
        el = _write_notation(holder, item, 0, None)
        el.set("uri", format_uri(item.uri))
    elif getattr(item, "origin", None) is not None:
        el = _write_constant(holder, item, None, extra=(
            ("uri", format_uri(item.uri)),
            ("origin", format_uri(item.origin)),
            ("via", format_morphism(item.via)),
        ))
    else:
        el = _write_constant(holder, item, None, extra=(("uri", format_uri(item.uri)),))
    holder.remove(el)
    return el


def serialize_item(item):
    return _to_bytes(item_element(item))


def serialize_element(el):
    return _to_bytes(el)
