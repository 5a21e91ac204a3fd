#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Theory Graph Data Model
=======================

Documents, theories, views, styles, their declarations, theory morphisms and
OpenMath-style terms.  A loaded graph is immutable; all objects are frozen
dataclasses and every declared item knows its canonical URI.

Terms compare by alpha-equivalence: ``Bind`` variables are compared by
position, never by name.
"""

import logging
from dataclasses import dataclass, field, replace

from errors import DuplicateUri, OrphanAtom
from uri import LocalName, MmtUri

logger = logging.getLogger(__name__)

# Reserved import name under which a theory's meta-theory appears
META = "meta"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    """Base class of OMS / OMV / OMA / OMBIND terms"""

    def key(self):
        """Locally nameless form; equal keys iff alpha-equivalent"""
        return _term_key(self, ())

    def __eq__(self, other):
        if not isinstance(other, Term):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def symbols(self):
        """All symbol URIs occurring in the term, in pre-order"""
        out = []
        _collect_symbols(self, out)
        return out

    def map_symbols(self, f):
        """Replace every SymbolRef by ``f(uri)`` (a Term), homomorphically"""
        return _map_symbols(self, f)

    def map_uris(self, f):
        """Rewrite every symbol URI with ``f(uri) -> uri``"""
        return _map_symbols(self, lambda u: SymbolRef(f(u)))


@dataclass(frozen=True, eq=False)
class SymbolRef(Term):
    uri: MmtUri
    source: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class Var(Term):
    name: str
    source: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class Apply(Term):
    head: Term
    args: tuple
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("Apply needs at least one argument")


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: Term = None


@dataclass(frozen=True, eq=False)
class Bind(Term):
    binder: Term
    vars: tuple
    body: Term
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        decls = tuple(v if isinstance(v, VarDecl) else VarDecl(*v) if isinstance(v, tuple) else VarDecl(v)
                      for v in self.vars)
        object.__setattr__(self, "vars", decls)
        if not decls:
            raise ValueError("Bind needs at least one variable")
        names = [v.name for v in decls]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate bound variable in {names}")


def _term_key(t, bound):
    if isinstance(t, SymbolRef):
        return ("S", str(t.uri))
    if isinstance(t, Var):
        for depth, name in enumerate(reversed(bound)):
            if name == t.name:
                return ("B", depth)
        return ("F", t.name)
    if isinstance(t, Apply):
        return ("A", _term_key(t.head, bound), tuple(_term_key(a, bound) for a in t.args))
    if isinstance(t, Bind):
        types = []
        scope = bound
        for v in t.vars:
            types.append(None if v.type is None else _term_key(v.type, scope))
            scope = scope + (v.name,)
        return ("L", _term_key(t.binder, bound), tuple(types), _term_key(t.body, scope))
    raise TypeError(f"not a term: {t!r}")


def _collect_symbols(t, out):
    if isinstance(t, SymbolRef):
        out.append(t.uri)
    elif isinstance(t, Apply):
        _collect_symbols(t.head, out)
        for a in t.args:
            _collect_symbols(a, out)
    elif isinstance(t, Bind):
        _collect_symbols(t.binder, out)
        for v in t.vars:
            if v.type is not None:
                _collect_symbols(v.type, out)
        _collect_symbols(t.body, out)


def _map_symbols(t, f):
    if isinstance(t, SymbolRef):
        return f(t.uri)
    if isinstance(t, Var):
        return t
    if isinstance(t, Apply):
        return Apply(_map_symbols(t.head, f), tuple(_map_symbols(a, f) for a in t.args))
    if isinstance(t, Bind):
        return Bind(
            _map_symbols(t.binder, f),
            tuple(VarDecl(v.name, None if v.type is None else _map_symbols(v.type, f)) for v in t.vars),
            _map_symbols(t.body, f),
        )
    raise TypeError(f"not a term: {t!r}")


def alpha_equal(a, b):
    if a is None or b is None:
        return a is b
    return a.key() == b.key()


def rename_bound(t, old, new):
    """Rename the variable bound as ``old`` by every binder in ``t`` to ``new``"""
    if isinstance(t, Apply):
        return Apply(rename_bound(t.head, old, new), tuple(rename_bound(a, old, new) for a in t.args))
    if isinstance(t, Bind):
        if old in [v.name for v in t.vars]:
            body = _substitute_var(t.body, old, Var(new))
            vars_ = tuple(VarDecl(new if v.name == old else v.name, v.type) for v in t.vars)
            return Bind(t.binder, vars_, rename_bound(body, old, new))
        return Bind(t.binder, t.vars, rename_bound(t.body, old, new))
    return t


def _substitute_var(t, name, value):
    if isinstance(t, Var):
        return value if t.name == name else t
    if isinstance(t, Apply):
        return Apply(_substitute_var(t.head, name, value), tuple(_substitute_var(a, name, value) for a in t.args))
    if isinstance(t, Bind):
        if name in [v.name for v in t.vars]:
            return t
        return Bind(t.binder, t.vars, _substitute_var(t.body, name, value))
    return t


# ---------------------------------------------------------------------------
# Morphisms
# ---------------------------------------------------------------------------

class Morphism:
    def map_uris(self, f):
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(Morphism):
    theory: MmtUri

    def map_uris(self, f):
        return Identity(f(self.theory))


@dataclass(frozen=True)
class ImportLink(Morphism):
    """The morphism induced by the import path ``path`` into ``theory``"""
    theory: MmtUri
    path: LocalName

    def map_uris(self, f):
        return ImportLink(f(self.theory), self.path)


@dataclass(frozen=True)
class ViewLink(Morphism):
    uri: MmtUri

    def map_uris(self, f):
        return ViewLink(f(self.uri))


@dataclass(frozen=True)
class Compose(Morphism):
    """``first`` then ``second`` (diagram order)"""
    first: Morphism
    second: Morphism

    def map_uris(self, f):
        return Compose(self.first.map_uris(f), self.second.map_uris(f))


def morphism_uris(m):
    """Module URIs a morphism expression refers to"""
    if isinstance(m, Identity):
        return [m.theory]
    if isinstance(m, ImportLink):
        return [m.theory]
    if isinstance(m, ViewLink):
        return [m.uri]
    return morphism_uris(m.first) + morphism_uris(m.second)


# ---------------------------------------------------------------------------
# Declarations and modules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    uri: MmtUri
    type: Term = None
    definiens: Term = None
    source: object = field(default=None, compare=False, repr=False)

    @property
    def name(self):
        return self.uri.sym


@dataclass(frozen=True)
class ConstAssign:
    uri: MmtUri
    target: LocalName
    value: Term
    source: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ImportAssign:
    uri: MmtUri
    target: LocalName
    value: Morphism
    source: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Import:
    uri: MmtUri
    domain: MmtUri
    assignments: tuple = ()
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))

    @property
    def name(self):
        return self.uri.sym


@dataclass(frozen=True)
class Notation:
    uri: MmtUri
    applies_to: MmtUri
    role: str = "constant"
    fixity: str = "prefix"
    prec_in: int = 0
    prec_out: int = 0
    operator: str = None
    separator: str = None
    brackets: tuple = None
    assoc: str = "left"
    holes: tuple = None
    source: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Theory:
    uri: MmtUri
    meta: MmtUri = None
    declarations: tuple = ()
    notations: tuple = ()
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "declarations", tuple(self.declarations))
        object.__setattr__(self, "notations", tuple(self.notations))

    @property
    def name(self):
        return self.uri.mod

    def constants(self):
        return [d for d in self.declarations if isinstance(d, Constant)]

    def imports(self):
        return [d for d in self.declarations if isinstance(d, Import)]


@dataclass(frozen=True)
class View:
    uri: MmtUri
    domain: MmtUri
    codomain: MmtUri
    assignments: tuple = ()
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))

    @property
    def name(self):
        return self.uri.mod


@dataclass(frozen=True)
class Style:
    uri: MmtUri
    imports: tuple = ()
    notations: tuple = ()
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "imports", tuple(self.imports))
        object.__setattr__(self, "notations", tuple(self.notations))

    @property
    def name(self):
        return self.uri.mod


@dataclass(frozen=True)
class Document:
    base: MmtUri
    modules: tuple = ()
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))

    def module(self, name):
        for m in self.modules:
            if m.name == name:
                return m
        return None


def children(module):
    """Directly declared items of a module, in source order"""
    if isinstance(module, Theory):
        items = []
        for decl in module.declarations:
            items.append(decl)
            if isinstance(decl, Import):
                items.extend(decl.assignments)
        return items + list(module.notations)
    if isinstance(module, View):
        return list(module.assignments)
    if isinstance(module, Style):
        return list(module.notations)
    return []


# ---------------------------------------------------------------------------
# Theory graph
# ---------------------------------------------------------------------------

class TheoryGraph:
    """A set of documents with an index from URIs to declared items"""

    def __init__(self, documents=()):
        self.documents = {}
        self._modules = {}
        self._items = {}
        # per-URI memo owned by the flatten module
        self.cache = {}
        for doc in documents:
            self.add_document(doc)

    def add_document(self, doc):
        key = str(doc.base)
        if key in self.documents:
            raise DuplicateUri(f"document {key} loaded twice", uri=key)
        for module in doc.modules:
            if module.uri in self._modules:
                raise DuplicateUri("module declared twice", uri=str(module.uri))
        self.documents[key] = doc
        for module in doc.modules:
            self._modules[module.uri] = module
            for item in children(module):
                if item.uri in self._items:
                    raise DuplicateUri("declared twice", uri=str(item.uri))
                self._items[item.uri] = item
        self.cache.clear()

    def module(self, uri):
        return self._modules.get(uri)

    def modules(self):
        return list(self._modules.values())

    def theories(self):
        return [m for m in self._modules.values() if isinstance(m, Theory)]

    def views(self):
        return [m for m in self._modules.values() if isinstance(m, View)]

    def styles(self):
        return [m for m in self._modules.values() if isinstance(m, Style)]

    def lookup(self, uri):
        if uri.is_document:
            return self.documents.get(str(uri))
        if uri.is_module:
            return self._modules.get(uri)
        return self._items.get(uri)

    def __eq__(self, other):
        if not isinstance(other, TheoryGraph):
            return NotImplemented
        return self.documents == other.documents

    def __repr__(self):
        return f"TheoryGraph({len(self.documents)} documents, {len(self._modules)} modules)"


def lookup(graph, uri):
    """The syntactic item declared at ``uri`` (induced items are flatten's job)"""
    return graph.lookup(uri)


# ---------------------------------------------------------------------------
# Atomic declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryHeader:
    meta: MmtUri = None


@dataclass(frozen=True)
class ViewHeader:
    domain: MmtUri
    codomain: MmtUri


@dataclass(frozen=True)
class StyleHeader:
    imports: tuple = ()


@dataclass(frozen=True)
class ImportHeader:
    domain: MmtUri


@dataclass(frozen=True)
class AtomicDecl:
    uri: MmtUri
    payload: object
    order: tuple = field(default=(), compare=False)

    @property
    def is_header(self):
        return isinstance(self.payload, (TheoryHeader, ViewHeader, StyleHeader))


def atomize(doc):
    """Decompose a document into header atoms followed by one atom per child"""
    atoms = []
    for m, module in enumerate(doc.modules):
        if isinstance(module, Theory):
            atoms.append(AtomicDecl(module.uri, TheoryHeader(module.meta), (m,)))
            for k, decl in enumerate(module.declarations):
                if isinstance(decl, Import):
                    atoms.append(AtomicDecl(decl.uri, ImportHeader(decl.domain), (m, 0, k)))
                    for j, a in enumerate(decl.assignments):
                        atoms.append(AtomicDecl(a.uri, a, (m, 0, k, j)))
                else:
                    atoms.append(AtomicDecl(decl.uri, decl, (m, 0, k)))
            for n, notation in enumerate(module.notations):
                atoms.append(AtomicDecl(notation.uri, notation, (m, 1, n)))
        elif isinstance(module, View):
            atoms.append(AtomicDecl(module.uri, ViewHeader(module.domain, module.codomain), (m,)))
            for j, a in enumerate(module.assignments):
                atoms.append(AtomicDecl(a.uri, a, (m, 0, j)))
        elif isinstance(module, Style):
            atoms.append(AtomicDecl(module.uri, StyleHeader(module.imports), (m,)))
            for n, notation in enumerate(module.notations):
                atoms.append(AtomicDecl(notation.uri, notation, (m, 1, n)))
    return atoms


class _Builder:
    def __init__(self, atom):
        self.atom = atom
        self.children = []


def assemble(atoms):
    """Rebuild a theory graph from a dependency-respecting stream of atoms"""
    modules = {}
    imports = {}
    seen = set()

    for atom in atoms:
        if atom.uri in seen:
            raise DuplicateUri("atom delivered twice", uri=str(atom.uri))
        seen.add(atom.uri)

        payload = atom.payload
        if atom.is_header:
            modules[atom.uri] = _Builder(atom)
            continue

        module_uri = atom.uri.module_uri
        parent = modules.get(module_uri)
        if parent is None:
            raise OrphanAtom(f"container {module_uri} not yet declared", uri=str(atom.uri))

        if isinstance(payload, ImportHeader):
            builder = _Builder(atom)
            imports[atom.uri] = builder
            parent.children.append(builder)
        elif isinstance(payload, (ConstAssign, ImportAssign)) and isinstance(parent.atom.payload, TheoryHeader):
            import_uri = module_uri / atom.uri.sym.head
            container = imports.get(import_uri)
            if container is None:
                raise OrphanAtom(f"import {import_uri} not yet declared", uri=str(atom.uri))
            container.children.append(atom)
        else:
            parent.children.append(atom)

    def ordered(items):
        return sorted(items, key=lambda x: (x.atom.order if isinstance(x, _Builder) else x.order))

    documents = {}
    for uri, builder in modules.items():
        header = builder.atom.payload
        if isinstance(header, TheoryHeader):
            decls, notations = [], []
            for child in ordered(builder.children):
                if isinstance(child, _Builder):
                    assignments = tuple(a.payload for a in ordered(child.children))
                    decls.append(Import(child.atom.uri, child.atom.payload.domain, assignments))
                elif isinstance(child.payload, Notation):
                    notations.append(child.payload)
                else:
                    decls.append(child.payload)
            module = Theory(uri, header.meta, tuple(decls), tuple(notations))
        elif isinstance(header, ViewHeader):
            module = View(uri, header.domain, header.codomain,
                          tuple(a.payload for a in ordered(builder.children)))
        else:
            module = Style(uri, header.imports, tuple(a.payload for a in ordered(builder.children)))
        documents.setdefault(uri.doc, []).append((builder.atom.order, module))

    graph = TheoryGraph()
    for doc, entries in documents.items():
        entries.sort(key=lambda e: e[0])
        graph.add_document(Document(MmtUri(doc), tuple(m for _, m in entries)))
    logger.debug("Assembled %d modules from atom stream", len(modules))
    return graph


# ---------------------------------------------------------------------------
# URI rewriting
# ---------------------------------------------------------------------------

def module_prefix_mapper(old, new):
    """URI rewriter moving everything under module ``old`` to module ``new``"""
    def f(u):
        if u.doc == old.doc and u.mod is not None and u.mod.startswith(old.mod):
            rest = u.mod.segments[len(old.mod.segments):]
            return MmtUri(new.doc, LocalName(new.mod.segments + rest), u.sym)
        return u
    return f


def _map_assignment(a, f):
    # terms and morphisms both expose map_uris
    return replace(a, uri=f(a.uri), value=a.value.map_uris(f))


def _map_notation(n, f):
    applies_to = n.applies_to if n.applies_to.doc == "" else f(n.applies_to)
    return replace(n, uri=f(n.uri), applies_to=applies_to)


def _map_decl(d, f):
    if isinstance(d, Constant):
        return replace(
            d,
            uri=f(d.uri),
            type=None if d.type is None else d.type.map_uris(f),
            definiens=None if d.definiens is None else d.definiens.map_uris(f),
        )
    return replace(d, uri=f(d.uri), domain=f(d.domain),
                   assignments=tuple(_map_assignment(a, f) for a in d.assignments))


def map_module_uris(module, f):
    if isinstance(module, Theory):
        return replace(
            module,
            uri=f(module.uri),
            meta=None if module.meta is None else f(module.meta),
            declarations=tuple(_map_decl(d, f) for d in module.declarations),
            notations=tuple(_map_notation(n, f) for n in module.notations),
        )
    if isinstance(module, View):
        return replace(module, uri=f(module.uri), domain=f(module.domain), codomain=f(module.codomain),
                       assignments=tuple(_map_assignment(a, f) for a in module.assignments))
    return replace(module, uri=f(module.uri), imports=tuple(f(i) for i in module.imports),
                   notations=tuple(_map_notation(n, f) for n in module.notations))


def rename_references(doc, old, new):
    """Rewrite every reference to module ``old`` (and anything below it) to ``new``"""
    f = module_prefix_mapper(old, new)
    return replace(doc, modules=tuple(map_module_uris(m, f) for m in doc.modules))
