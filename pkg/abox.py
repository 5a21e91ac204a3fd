#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ABox Extraction and Relational Queries
======================================

A theory graph compiles to a set of facts over URI individuals:

    U theory   http://…/algebra1.omdoc?Ring
    B HasDomain http://…/algebra1.omdoc?Ring?mult  http://…/algebra1.omdoc?Monoid

Queries are relation-algebra expressions evaluated from a start individual:

    Imports+            transitive imports
    Imports^-1          theories importing the start
    HasDomain ; Imports (composition, left to right)
    DeclaredIn | Imports
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field

from errors import InconsistentFacts, MalformedUri, UnknownRelation
from model import ConstAssign, Constant, Style, Theory, View, morphism_uris
from uri import parse_uri

logger = logging.getLogger(__name__)

UNARY_TYPES = (
    "document", "theory", "view", "import", "constant", "untyped-constant",
    "constant-assignment", "import-assignment", "style", "notation",
)

BINARY_RELATIONS = (
    "DeclaredIn", "HasMetaTheory", "HasDomain", "HasCodomain", "Imports",
    "HasOccurrenceOfInType", "HasOccurrenceOfInDefiniens", "HasAssignmentFor",
    "DependsOn", "HasNotationFor", "StyleImports",
)

MODULE_TYPES = ("theory", "view", "style")
CONTAINER_TYPES = ("document", "theory", "view", "style", "import")


@dataclass(frozen=True, order=True)
class Unary:
    type: str
    individual: object

    def line(self):
        return f"U {self.type} {self.individual}"


@dataclass(frozen=True, order=True)
class Binary:
    rel: str
    subject: object
    object: object

    def line(self):
        return f"B {self.rel} {self.subject} {self.object}"


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

class _Extractor:
    def __init__(self):
        self.facts = set()

    def unary(self, type_, u):
        self.facts.add(Unary(type_, u))

    def binary(self, rel, s, o):
        self.facts.add(Binary(rel, s, o))

    def depends(self, module_uri, target):
        if target is not None and target != module_uri:
            self.binary("DependsOn", module_uri, target)

    def occurrences(self, rel, item_uri, module_uri, term):
        if term is None:
            return
        for s in term.symbols():
            self.binary(rel, item_uri, s)
            self.depends(module_uri, s.module_uri)

    def assignment(self, a, container, module_uri, domain):
        if isinstance(a, ConstAssign):
            self.unary("constant-assignment", a.uri)
            self.occurrences("HasOccurrenceOfInDefiniens", a.uri, module_uri, a.value)
        else:
            self.unary("import-assignment", a.uri)
            for u in morphism_uris(a.value):
                self.depends(module_uri, u)
        self.binary("DeclaredIn", a.uri, container)
        self.binary("HasAssignmentFor", a.uri, domain.with_sym(a.target))

    def notation(self, n, module_uri):
        self.unary("notation", n.uri)
        self.binary("DeclaredIn", n.uri, module_uri)
        if n.applies_to.doc:
            self.binary("HasNotationFor", n.uri, n.applies_to)

    def theory(self, t):
        self.unary("theory", t.uri)
        if t.meta is not None:
            self.binary("HasMetaTheory", t.uri, t.meta)
            self.depends(t.uri, t.meta)
        for decl in t.declarations:
            self.binary("DeclaredIn", decl.uri, t.uri)
            if isinstance(decl, Constant):
                self.unary("constant" if decl.type is not None else "untyped-constant", decl.uri)
                self.occurrences("HasOccurrenceOfInType", decl.uri, t.uri, decl.type)
                self.occurrences("HasOccurrenceOfInDefiniens", decl.uri, t.uri, decl.definiens)
                continue
            self.unary("import", decl.uri)
            self.binary("HasDomain", decl.uri, decl.domain)
            self.binary("HasCodomain", decl.uri, t.uri)
            self.binary("Imports", t.uri, decl.domain)
            self.depends(t.uri, decl.domain)
            for a in decl.assignments:
                self.assignment(a, decl.uri, t.uri, decl.domain)
        for n in t.notations:
            self.notation(n, t.uri)

    def view(self, v):
        self.unary("view", v.uri)
        self.binary("HasDomain", v.uri, v.domain)
        self.binary("HasCodomain", v.uri, v.codomain)
        self.depends(v.uri, v.domain)
        self.depends(v.uri, v.codomain)
        for a in v.assignments:
            self.assignment(a, v.uri, v.uri, v.domain)

    def style(self, s):
        self.unary("style", s.uri)
        for imported in s.imports:
            self.binary("StyleImports", s.uri, imported)
            self.depends(s.uri, imported)
        for n in s.notations:
            self.notation(n, s.uri)


def extract_abox(doc):
    """All facts of one document; a pure function of the document"""
    ex = _Extractor()
    ex.unary("document", doc.base)
    for module in doc.modules:
        ex.binary("DeclaredIn", module.uri, doc.base)
        if isinstance(module, Theory):
            ex.theory(module)
        elif isinstance(module, View):
            ex.view(module)
        elif isinstance(module, Style):
            ex.style(module)
    logger.debug("Extracted %d facts from %s", len(ex.facts), doc.base)
    return frozenset(ex.facts)


def graph_abox(graph):
    facts = set()
    for doc in graph.documents.values():
        facts |= extract_abox(doc)
    return frozenset(facts)


# ---------------------------------------------------------------------------
# .abox line format
# ---------------------------------------------------------------------------

def format_facts(facts):
    lines = sorted(f.line() for f in facts)
    return "".join(line + "\n" for line in lines)


def parse_facts(text):
    facts = set()
    for number, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(" ")
        try:
            if parts[0] == "U" and len(parts) == 3 and parts[1] in UNARY_TYPES:
                facts.add(Unary(parts[1], parse_uri(parts[2])))
                continue
            if parts[0] == "B" and len(parts) == 4 and parts[1] in BINARY_RELATIONS:
                facts.add(Binary(parts[1], parse_uri(parts[2]), parse_uri(parts[3])))
                continue
        except MalformedUri as e:
            raise InconsistentFacts(f"line {number}: {e.message}")
        raise InconsistentFacts(f"line {number}: not a fact: {line!r}")
    return frozenset(facts)


# ---------------------------------------------------------------------------
# Index
# ---------------------------------------------------------------------------

class FactIndex:
    """Subject → objects and object → subjects per relation, plus a type table.

    ``lookups`` counts index lookups per relation.
    """

    def __init__(self, facts=()):
        self.forward = defaultdict(lambda: defaultdict(set))
        self.backward = defaultdict(lambda: defaultdict(set))
        self.types = {}
        self.lookups = defaultdict(int)
        for fact in facts:
            self.add(fact)

    def add(self, fact):
        if isinstance(fact, Unary):
            self.types.setdefault(fact.individual, set()).add(fact.type)
        else:
            self.forward[fact.rel][fact.subject].add(fact.object)
            self.backward[fact.rel][fact.object].add(fact.subject)

    def objects(self, rel, subject):
        self.lookups[rel] += 1
        return set(self.forward[rel].get(subject, ()))

    def subjects(self, rel, obj):
        self.lookups[rel] += 1
        return set(self.backward[rel].get(obj, ()))

    def type_of(self, individual):
        types = self.types.get(individual)
        return next(iter(types)) if types else None

    def individuals(self, *types):
        return {u for u, ts in self.types.items() if not types or ts & set(types)}

    def modules(self):
        return self.individuals(*MODULE_TYPES)


def as_index(facts):
    if hasattr(facts, "objects") and hasattr(facts, "subjects"):
        return facts
    return FactIndex(facts)


# ---------------------------------------------------------------------------
# Relation expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Base:
    rel: str


@dataclass(frozen=True)
class Inverse:
    expr: object


@dataclass(frozen=True)
class Compose:
    first: object
    second: object


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class TransClosure:
    expr: object


def relations_of(e):
    if isinstance(e, Base):
        return {e.rel}
    if isinstance(e, (Inverse, TransClosure)):
        return relations_of(e.expr)
    if isinstance(e, Compose):
        return relations_of(e.first) | relations_of(e.second)
    return relations_of(e.left) | relations_of(e.right)


_TOKEN_RE = re.compile(r"\s*(?:(\^-1)|([()|;+])|([A-Za-z][A-Za-z0-9-]*))")


def _tokenize(text):
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise UnknownRelation(f"cannot read relation expression at {text[pos:]!r}")
        tokens.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return tokens


class _RelParser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        token = self.peek()
        self.pos += 1
        return token

    def parse(self):
        if not self.tokens:
            raise UnknownRelation("empty relation expression")
        e = self.union()
        if self.peek() is not None:
            raise UnknownRelation(f"unexpected {self.peek()!r} in {self.text!r}")
        return e

    def union(self):
        e = self.compose()
        while self.peek() == "|":
            self.take()
            e = Union(e, self.compose())
        return e

    def compose(self):
        e = self.postfix()
        while self.peek() == ";":
            self.take()
            e = Compose(e, self.postfix())
        return e

    def postfix(self):
        e = self.atom()
        while self.peek() in ("+", "^-1"):
            e = TransClosure(e) if self.take() == "+" else Inverse(e)
        return e

    def atom(self):
        token = self.take()
        if token == "(":
            e = self.union()
            if self.take() != ")":
                raise UnknownRelation(f"missing ')' in {self.text!r}")
            return e
        if token is None or token in "()|;+" or token == "^-1":
            raise UnknownRelation(f"expected a relation name in {self.text!r}")
        if token not in BINARY_RELATIONS:
            raise UnknownRelation(f"unknown relation {token!r}")
        return Base(token)


def parse_rel_expr(text):
    """``R``, ``R^-1``, ``a ; b``, ``a | b``, ``e+`` and parentheses"""
    return _RelParser(text).parse()


def format_rel_expr(e):
    if isinstance(e, Base):
        return e.rel
    if isinstance(e, (Inverse, TransClosure)):
        inner = format_rel_expr(e.expr)
        if isinstance(e.expr, (Compose, Union)):
            inner = f"({inner})"
        return inner + ("^-1" if isinstance(e, Inverse) else "+")
    if isinstance(e, Compose):
        parts = [format_rel_expr(x) for x in (e.first, e.second)]
        parts = [f"({p})" if isinstance(x, Union) else p for p, x in zip(parts, (e.first, e.second))]
        return " ; ".join(parts)
    return f"{format_rel_expr(e.left)} | {format_rel_expr(e.right)}"


def _step(index, e, nodes, inverse):
    if isinstance(e, Base):
        out = set()
        for n in nodes:
            out |= index.subjects(e.rel, n) if inverse else index.objects(e.rel, n)
        return out
    if isinstance(e, Inverse):
        return _step(index, e.expr, nodes, not inverse)
    if isinstance(e, Compose):
        if inverse:
            return _step(index, e.first, _step(index, e.second, nodes, True), True)
        return _step(index, e.second, _step(index, e.first, nodes, False), False)
    if isinstance(e, Union):
        return _step(index, e.left, nodes, inverse) | _step(index, e.right, nodes, inverse)

    frontier = _step(index, e.expr, nodes, inverse)
    result = set(frontier)
    while frontier:
        frontier = _step(index, e.expr, frontier, inverse) - result
        result |= frontier
    return result


def query(facts, start, e):
    """Individuals related to ``start`` by ``e`` (a RelExpr or its surface text)"""
    if isinstance(e, str):
        e = parse_rel_expr(e)
    unknown = relations_of(e) - set(BINARY_RELATIONS)
    if unknown:
        raise UnknownRelation(f"unknown relation {sorted(unknown)[0]!r}")
    return _step(as_index(facts), e, {start}, False)


# ---------------------------------------------------------------------------
# Structure recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeclSkeleton:
    uri: object
    kind: str
    container: object
    domain: object = None
    target: object = None
    applies_to: object = None
    type_occurrences: frozenset = frozenset()
    definiens_occurrences: frozenset = frozenset()


@dataclass(frozen=True)
class ModuleSkeleton:
    uri: object
    kind: str
    document: object
    meta: object = None
    domain: object = None
    codomain: object = None
    imports: frozenset = frozenset()
    declarations: frozenset = frozenset()


@dataclass(frozen=True)
class GraphSkeleton:
    documents: frozenset = frozenset()
    modules: frozenset = field(default_factory=frozenset)

    def module(self, uri):
        for m in self.modules:
            if m.uri == uri:
                return m
        return None


def _decl_skeleton(kind, uri, container, **extra):
    return DeclSkeleton(uri, kind, container, **extra)


def _notation_skeleton(n, container):
    return _decl_skeleton("notation", n.uri, container, applies_to=n.applies_to if n.applies_to.doc else None)


def _assign_skeleton(a, container, domain):
    if isinstance(a, ConstAssign):
        return _decl_skeleton("constant-assignment", a.uri, container, target=domain.with_sym(a.target),
                              definiens_occurrences=frozenset(a.value.symbols()))
    return _decl_skeleton("import-assignment", a.uri, container, target=domain.with_sym(a.target))


def _module_skeleton(module, doc_base):
    decls = []
    if isinstance(module, Theory):
        for d in module.declarations:
            if isinstance(d, Constant):
                decls.append(_decl_skeleton(
                    "constant" if d.type is not None else "untyped-constant", d.uri, module.uri,
                    type_occurrences=frozenset(d.type.symbols()) if d.type is not None else frozenset(),
                    definiens_occurrences=frozenset(d.definiens.symbols()) if d.definiens is not None else frozenset(),
                ))
            else:
                decls.append(_decl_skeleton("import", d.uri, module.uri, domain=d.domain))
                decls.extend(_assign_skeleton(a, d.uri, d.domain) for a in d.assignments)
        decls.extend(_notation_skeleton(n, module.uri) for n in module.notations)
        return ModuleSkeleton(module.uri, "theory", doc_base, meta=module.meta, declarations=frozenset(decls))
    if isinstance(module, View):
        decls = [_assign_skeleton(a, module.uri, module.domain) for a in module.assignments]
        return ModuleSkeleton(module.uri, "view", doc_base, domain=module.domain, codomain=module.codomain,
                              declarations=frozenset(decls))
    decls = [_notation_skeleton(n, module.uri) for n in module.notations]
    return ModuleSkeleton(module.uri, "style", doc_base, imports=frozenset(module.imports),
                          declarations=frozenset(decls))


def skeleton(source):
    """Declaration skeleton of a Document or TheoryGraph (term bodies dropped)"""
    docs = list(source.documents.values()) if hasattr(source, "documents") else [source]
    modules = set()
    for doc in docs:
        modules.update(_module_skeleton(m, doc.base) for m in doc.modules)
    return GraphSkeleton(frozenset(d.base for d in docs), frozenset(modules))


def recover_structure(facts):
    """Rebuild the skeleton of the graph the facts were extracted from"""
    types = {}
    for fact in facts:
        if isinstance(fact, Unary):
            if fact.individual in types and types[fact.individual] != fact.type:
                raise InconsistentFacts(f"typed both {types[fact.individual]} and {fact.type}",
                                        uri=str(fact.individual))
            types[fact.individual] = fact.type

    rel = defaultdict(lambda: defaultdict(set))
    for fact in facts:
        if isinstance(fact, Binary):
            if fact.subject not in types:
                raise InconsistentFacts(f"{fact.rel} subject has no type", uri=str(fact.subject))
            rel[fact.rel][fact.subject].add(fact.object)

    def single(name, subject, required=False):
        values = rel[name].get(subject, set())
        if len(values) > 1:
            raise InconsistentFacts(f"several {name} facts", uri=str(subject))
        if not values:
            if required:
                raise InconsistentFacts(f"missing {name} fact", uri=str(subject))
            return None
        return next(iter(values))

    containers = {}
    for individual, type_ in types.items():
        if type_ == "document":
            continue
        container = single("DeclaredIn", individual, required=True)
        if types.get(container) not in CONTAINER_TYPES:
            raise InconsistentFacts(f"container {container} is not a declared container", uri=str(individual))
        containers[individual] = container

    def module_of(individual):
        while types.get(individual) not in MODULE_TYPES:
            individual = containers[individual]
        return individual

    decls = defaultdict(set)
    for individual, type_ in types.items():
        if type_ in ("document",) + MODULE_TYPES:
            continue
        occ_type = frozenset(rel["HasOccurrenceOfInType"].get(individual, ()))
        occ_def = frozenset(rel["HasOccurrenceOfInDefiniens"].get(individual, ()))
        decls[module_of(individual)].add(DeclSkeleton(
            individual, type_, containers[individual],
            domain=single("HasDomain", individual) if type_ == "import" else None,
            target=single("HasAssignmentFor", individual),
            applies_to=single("HasNotationFor", individual),
            type_occurrences=occ_type,
            definiens_occurrences=occ_def,
        ))

    modules = set()
    for individual, type_ in types.items():
        if type_ not in MODULE_TYPES:
            continue
        document = containers[individual]
        if types.get(document) != "document":
            raise InconsistentFacts("module not declared in a document", uri=str(individual))
        modules.add(ModuleSkeleton(
            individual, type_, document,
            meta=single("HasMetaTheory", individual),
            domain=single("HasDomain", individual) if type_ == "view" else None,
            codomain=single("HasCodomain", individual) if type_ == "view" else None,
            imports=frozenset(rel["StyleImports"].get(individual, ())),
            declarations=frozenset(decls[individual]),
        ))

    documents = frozenset(u for u, t in types.items() if t == "document")
    logger.debug("Recovered %d modules from %d facts", len(modules), len(facts))
    return GraphSkeleton(documents, frozenset(modules))
