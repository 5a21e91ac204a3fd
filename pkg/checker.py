#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Validation
==========

Three increasingly strict stages:

1. grammar     -- the reader's built-in grammar check
2. structural  -- unique URIs, resolvable references, acyclic imports and
                  meta-theories, well-typed morphism compositions; run over
                  a stream of atomic declarations plus the ABox index of
                  already known documents (never their sources)
3. typed       -- judgments delegated to a foundation plugin registered for
                  the meta-theory

Content problems never raise: they end up in a ValidationReport.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field

from lxml import etree

from abox import FactIndex
from config import DEFAULT_EXPANSION_DEPTH, DEFAULT_FOUNDATION_META
from errors import (
    DuplicateUri, GrammarError, ImportCycle, MalformedUri, MissingPlugin,
    MorphismDomainMismatch, TypeMismatch, UnmappedSymbol, UnresolvedReference,
)
from flatten import apply_morphism, deref, is_constant
from model import (
    META, ConstAssign, Constant, Identity, ImportAssign, ImportHeader, ImportLink, Notation, StyleHeader,
    SymbolRef, Theory, TheoryGraph, TheoryHeader, View, ViewHeader, ViewLink, alpha_equal, atomize,
)
from reader import read_document
from uri import parse_uri

logger = logging.getLogger(__name__)

LEVELS = ("none", "grammar", "structural", "typed")

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass(frozen=True, order=True)
class Issue:
    level: str
    code: str
    where: str
    message: str

    def line(self):
        return f"{self.level} {self.code} {self.where} {self.message}"


@dataclass
class ValidationReport:
    level: str
    requested: str
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.errors

    def codes(self):
        return sorted({e.code for e in self.errors})

    def error_set(self):
        return frozenset(self.errors)

    def to_lines(self):
        out = [e.line() for e in self.errors]
        out += [w.line() for w in self.warnings]
        stats = " ".join(f"{k}={v}" for k, v in sorted(self.stats.items()))
        out.append(f"{self.level} Result {self.requested} errors={len(self.errors)} "
                   f"warnings={len(self.warnings)} {stats}".rstrip())
        return "".join(line + "\n" for line in out)

    def to_element(self):
        root = etree.Element("report", level=self.level, requested=self.requested)
        for tag, issues in (("error", self.errors), ("warning", self.warnings)):
            for issue in issues:
                el = etree.SubElement(root, tag, level=issue.level, code=issue.code, uri=issue.where)
                el.text = issue.message
        stats = etree.SubElement(root, "stats")
        for key, value in sorted(self.stats.items()):
            stats.set(key, str(value))
        return root


def _issue(level, error):
    where = error.uri if error.uri is not None else error.source
    return Issue(level, error.code, str(where) if where is not None else "-", error.message)


def _finish(achieved_if_ok, fallback, requested, errors, warnings=(), stats=None):
    errors = sorted(set(errors))
    return ValidationReport(
        level=achieved_if_ok if not errors else fallback,
        requested=requested,
        errors=errors,
        warnings=sorted(set(warnings)),
        stats=dict(stats or {}),
    )


# ---------------------------------------------------------------------------
# Stage 1
# ---------------------------------------------------------------------------

def validate_grammar(paths):
    """Parse every file; returns (report, documents that parsed)"""
    documents, errors = [], []
    for path in paths:
        try:
            documents.append(read_document(path))
        except (GrammarError, MalformedUri) as e:
            errors.append(_issue("grammar", e))
        except OSError as e:
            errors.append(Issue("grammar", GrammarError.code, str(path), e.strerror or str(e)))
    report = _finish("grammar", "none", "grammar", errors, stats={"documents": len(documents)})
    return report, documents


# ---------------------------------------------------------------------------
# Stage 2
# ---------------------------------------------------------------------------

_HEADER_KINDS = {TheoryHeader: "theory", ViewHeader: "view", StyleHeader: "style"}


def _local_kind(payload):
    for cls, kind in _HEADER_KINDS.items():
        if isinstance(payload, cls):
            return kind
    if isinstance(payload, ImportHeader):
        return "import"
    if isinstance(payload, Constant):
        return "constant" if payload.type is not None else "untyped-constant"
    if isinstance(payload, ConstAssign):
        return "constant-assignment"
    if isinstance(payload, ImportAssign):
        return "import-assignment"
    if isinstance(payload, Notation):
        return "notation"
    return None


class _Resolver:
    """Answers structural questions from local atoms first, then the context index"""

    def __init__(self, atoms, context):
        self.local = {a.uri: a.payload for a in atoms}
        self.context = context
        self.local_imports = defaultdict(set)
        self.local_children = defaultdict(list)
        self.undefined = {}
        for u, payload in self.local.items():
            if isinstance(payload, ImportHeader):
                self.local_imports[u.module_uri].add(payload.domain)
            if u.sym is not None:
                self.local_children[u.module_uri].append((u, payload))

    def context_one(self, rel, subject):
        values = self.context.objects(rel, subject)
        return min(values) if values else None

    def kind(self, u):
        found = _local_kind(self.local[u]) if u in self.local else self.context.type_of(u)
        if found == "constant-assignment" and self.kind(u.module_uri) == "theory":
            # T?imp/c names the induced constant, not the instantiation
            found = None
        if found is not None:
            return found
        if u.sym is not None and len(u.sym) > 1:
            source = self.step(u.module_uri, u.sym.head)
            if source is not None:
                return self.kind(source.with_sym(u.sym.tail))
        return None

    def meta(self, theory):
        payload = self.local.get(theory)
        if isinstance(payload, TheoryHeader):
            return payload.meta
        return self.context_one("HasMetaTheory", theory)

    def import_domain(self, import_uri):
        payload = self.local.get(import_uri)
        if isinstance(payload, ImportHeader):
            return payload.domain
        if import_uri in self.local:
            return None
        return self.context_one("HasDomain", import_uri)

    def step(self, theory, name):
        if self.kind(theory) != "theory":
            return None
        if name == META:
            return self.meta(theory)
        return self.import_domain(theory / name)

    def walk(self, theory, path):
        for name in path.segments:
            theory = self.step(theory, name)
            if theory is None:
                return None
        return theory

    def view_ends(self, view):
        payload = self.local.get(view)
        if isinstance(payload, ViewHeader):
            return payload.domain, payload.codomain
        return self.context_one("HasDomain", view), self.context_one("HasCodomain", view)

    def theory_edges(self, theory):
        """Imports and meta edges of a theory"""
        if isinstance(self.local.get(theory), TheoryHeader):
            out = set(self.local_imports[theory])
            meta = self.local[theory].meta
            if meta is not None:
                out.add(meta)
            return out
        return self.context.objects("Imports", theory) | self.context.objects("HasMetaTheory", theory)

    def style_edges(self, style):
        payload = self.local.get(style)
        if isinstance(payload, StyleHeader):
            return set(payload.imports)
        return self.context.objects("StyleImports", style)

    def constants(self, theory):
        """(name, has definiens) of the constants declared in a theory"""
        if isinstance(self.local.get(theory), TheoryHeader):
            return [(u.sym, p.definiens is not None)
                    for u, p in self.local_children[theory] if isinstance(p, Constant)]
        # committed constants: a definiens shows up as its symbol occurrences
        return [(u.sym, bool(self.context.objects("HasOccurrenceOfInDefiniens", u)))
                for u in self.context.subjects("DeclaredIn", theory)
                if self.context.type_of(u) in ("constant", "untyped-constant")]

    def imports(self, theory):
        """(name, domain, assigned constant paths, assigned import paths) per import"""
        out = []
        if isinstance(self.local.get(theory), TheoryHeader):
            for u, p in self.local_children[theory]:
                if not isinstance(p, ImportHeader):
                    continue
                assigned = [a for v, a in self.local_children[theory]
                            if isinstance(a, (ConstAssign, ImportAssign)) and v.sym.head == u.sym.head]
                out.append((u.sym, p.domain,
                            {a.target for a in assigned if isinstance(a, ConstAssign)},
                            [a.target for a in assigned if isinstance(a, ImportAssign)]))
            return out
        for u in self.context.subjects("DeclaredIn", theory):
            if self.context.type_of(u) != "import":
                continue
            consts, prefixes = set(), []
            for a in self.context.subjects("DeclaredIn", u):
                target = self.context_one("HasAssignmentFor", a)
                if target is None:
                    continue
                if self.context.type_of(a) == "constant-assignment":
                    consts.add(target.sym)
                else:
                    prefixes.append(target.sym)
            out.append((u.sym, self.context_one("HasDomain", u), consts, prefixes))
        return out

    def undefined_constants(self, theory, active=frozenset()):
        """Paths of the flat constants of ``theory`` without a definiens, meta-theory excluded"""
        if theory in self.undefined:
            return self.undefined[theory]
        if theory is None or theory in active or self.kind(theory) != "theory":
            return frozenset()
        active = active | {theory}
        paths = {name for name, defined in self.constants(theory) if not defined}
        for name, domain, consts, prefixes in self.imports(theory):
            for path in self.undefined_constants(domain, active):
                if path in consts or any(_below(path, p) for p in prefixes):
                    continue
                paths.add(name / path)
        self.undefined[theory] = frozenset(paths)
        return self.undefined[theory]

    def ends(self, m):
        """(domain, codomain) of a morphism expression"""
        if isinstance(m, Identity):
            if self.kind(m.theory) != "theory":
                raise UnresolvedReference("identity of a non-theory", uri=str(m.theory))
            return m.theory, m.theory
        if isinstance(m, ImportLink):
            source = self.walk(m.theory, m.path)
            if source is None:
                raise UnresolvedReference(f"import path {m.path} does not resolve",
                                          uri=str(m.theory.with_sym(m.path)))
            return source, m.theory
        if isinstance(m, ViewLink):
            if self.kind(m.uri) != "view":
                raise UnresolvedReference("not a view", uri=str(m.uri))
            return self.view_ends(m.uri)
        d1, c1 = self.ends(m.first)
        d2, c2 = self.ends(m.second)
        if c1 != d2:
            raise MorphismDomainMismatch(f"codomain {c1} does not match domain {d2}")
        return d1, c2


def _below(path, prefix):
    return len(path) > len(prefix) and path.startswith(prefix)


def _reaches(start, edges):
    seen, stack = set(), list(edges(start))
    while stack:
        node = stack.pop()
        if node == start:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(edges(node))
    return False


def _term_symbols(term):
    return term.symbols() if term is not None else []


class _StructuralCheck:
    def __init__(self, atoms, context):
        self.atoms = atoms
        self.r = _Resolver(atoms, context)
        self.errors = []

    def error(self, cls, message, uri):
        self.errors.append(Issue("structural", cls.code, str(uri), message))

    def expect(self, u, kinds, owner, what):
        found = self.r.kind(u)
        if found is None:
            self.error(UnresolvedReference, f"{what} {u} does not resolve", owner)
        elif found not in kinds:
            self.error(UnresolvedReference, f"{what} {u} is a {found}, expected {'/'.join(kinds)}", owner)

    def symbols(self, term, owner):
        for s in _term_symbols(term):
            self.expect(s, ("constant", "untyped-constant"), owner, "symbol")

    def assignment(self, a, domain, codomain):
        target = domain.with_sym(a.target)
        if isinstance(a, ConstAssign):
            self.expect(target, ("constant", "untyped-constant"), a.uri, "assignment target")
            self.symbols(a.value, a.uri)
            return
        self.expect(target, ("import",), a.uri, "assignment target")
        try:
            source, image = self.r.ends(a.value)
        except (UnresolvedReference, MorphismDomainMismatch) as e:
            self.error(type(e), e.message, a.uri)
            return
        expected = self.r.walk(domain, a.target)
        if expected is not None and source != expected:
            self.error(MorphismDomainMismatch, f"morphism starts at {source}, import {a.target} at {expected}", a.uri)
        if codomain is not None and image != codomain:
            self.error(MorphismDomainMismatch, f"morphism ends at {image}, expected {codomain}", a.uri)

    def coverage(self, view, domain):
        """Every undefined flat constant of the domain receives exactly one value"""
        assigned = [a for _, a in self.r.local_children[view] if isinstance(a, (ConstAssign, ImportAssign))]
        for path in sorted(self.r.undefined_constants(domain), key=str):
            count = sum(1 for a in assigned
                        if (a.target == path if isinstance(a, ConstAssign) else _below(path, a.target)))
            if count == 0:
                self.error(UnmappedSymbol, f"no assignment for {path}", view.with_sym(path))
            elif count > 1:
                self.error(DuplicateUri, f"{path} is assigned {count} times", view.with_sym(path))

    def run(self):
        seen = set()
        for atom in self.atoms:
            if atom.uri in seen:
                self.error(DuplicateUri, "declared twice", atom.uri)
            seen.add(atom.uri)
            if atom.is_header and self.r.context.type_of(atom.uri) is not None:
                self.error(DuplicateUri, "module already declared in another document", atom.uri)

        for atom in self.atoms:
            p, u = atom.payload, atom.uri
            if isinstance(p, TheoryHeader):
                if p.meta is not None:
                    self.expect(p.meta, ("theory",), u, "meta-theory")
                if _reaches(u, self.r.theory_edges):
                    self.error(ImportCycle, "theory depends on itself through imports or meta-theories", u)
            elif isinstance(p, ViewHeader):
                self.expect(p.domain, ("theory",), u, "view domain")
                self.expect(p.codomain, ("theory",), u, "view codomain")
                self.coverage(u, p.domain)
            elif isinstance(p, StyleHeader):
                for imported in p.imports:
                    self.expect(imported, ("style",), u, "style import")
                if _reaches(u, self.r.style_edges):
                    self.error(ImportCycle, "style imports itself", u)
            elif isinstance(p, ImportHeader):
                self.expect(p.domain, ("theory",), u, "import domain")
            elif isinstance(p, Constant):
                self.symbols(p.type, u)
                self.symbols(p.definiens, u)
            elif isinstance(p, (ConstAssign, ImportAssign)):
                container = u.module_uri
                kind = self.r.kind(container)
                if kind == "view":
                    domain, codomain = self.r.view_ends(container)
                else:
                    domain, codomain = self.r.import_domain(container / u.sym.head), container
                if domain is not None:
                    self.assignment(p, domain, codomain)
        return self.errors


def validate_structural(atoms, context=None):
    """Stage 2 over an atom stream; ``context`` indexes previously known documents"""
    atoms = list(atoms)
    context = context if context is not None else FactIndex()
    errors = _StructuralCheck(atoms, context).run()
    stats = {
        "modules": sum(1 for a in atoms if a.is_header),
        "declarations": sum(1 for a in atoms if not a.is_header),
    }
    report = _finish("structural", "grammar", "structural", errors, stats=stats)
    logger.debug("Structural validation of %d atoms: %d error(s)", len(atoms), len(report.errors))
    return report


# ---------------------------------------------------------------------------
# Stage 3
# ---------------------------------------------------------------------------

class FoundationPlugin:
    """Typing and equality judgments for theories over one meta-theory.

    Implementations keep no state between calls and see symbols only through
    ``flatten.deref``.
    """

    meta = None

    def equal(self, graph, theory, a, b):
        raise NotImplementedError

    def has_type(self, graph, theory, a, b):
        raise NotImplementedError


class SyntacticFoundation(FoundationPlugin):
    """Alpha-equivalence up to bounded definiens expansion"""

    def __init__(self, meta, expansion_depth=DEFAULT_EXPANSION_DEPTH):
        self.meta = parse_uri(meta) if isinstance(meta, str) else meta
        self.expansion_depth = expansion_depth

    def _expand(self, graph, term):
        def unfold(u):
            item = deref(graph, u)
            if is_constant(item) and item.definiens is not None:
                return item.definiens
            return SymbolRef(u)
        return term.map_symbols(unfold)

    def equal(self, graph, theory, a, b):
        for _ in range(self.expansion_depth + 1):
            if alpha_equal(a, b):
                return YES
            a2, b2 = self._expand(graph, a), self._expand(graph, b)
            if alpha_equal(a2, a) and alpha_equal(b2, b):
                return NO
            a, b = a2, b2
        return UNKNOWN

    def has_type(self, graph, theory, a, b):
        if not isinstance(a, SymbolRef):
            return UNKNOWN
        item = deref(graph, a.uri)
        if not is_constant(item) or item.type is None:
            return UNKNOWN
        return self.equal(graph, theory, item.type, b)


def syntactic_foundation(meta=None, expansion_depth=DEFAULT_EXPANSION_DEPTH):
    return SyntacticFoundation(meta or DEFAULT_FOUNDATION_META, expansion_depth)


def foundations_from_config(config):
    return [SyntacticFoundation(m, config.expansion_depth) for m in config.foundations]


def _registry(plugins):
    if isinstance(plugins, FoundationPlugin):
        plugins = [plugins]
    return {p.meta: p for p in plugins}


class _TypedCheck:
    def __init__(self, graph, registry):
        self.graph = graph
        self.registry = registry
        self.errors = []
        self.warnings = []
        self.checked = 0

    def plugin(self, theory_uri, owner):
        theory = self.graph.module(theory_uri)
        if not isinstance(theory, Theory) or theory.meta is None:
            return None
        plugin = self.registry.get(theory.meta)
        if plugin is None:
            self.errors.append(Issue("typed", MissingPlugin.code, str(theory.meta),
                                     f"no foundation registered (needed by {owner})"))
        return plugin

    def judge(self, plugin, theory, value, expected, owner):
        self.checked += 1
        answer = plugin.has_type(self.graph, theory, value, expected)
        if answer == NO:
            self.errors.append(Issue("typed", TypeMismatch.code, str(owner), "value does not have the expected type"))
        elif answer == UNKNOWN:
            logger.warning("Foundation could not decide the type of %s", owner)
            self.warnings.append(Issue("typed", "Unknown", str(owner), "foundation answered unknown"))

    def assignment(self, plugin, a, domain, codomain, morphism):
        if not isinstance(a, ConstAssign):
            return
        target = deref(self.graph, domain.with_sym(a.target))
        if not is_constant(target) or target.type is None:
            return
        try:
            expected = apply_morphism(self.graph, morphism, target.type)
        except UnmappedSymbol as e:
            self.errors.append(Issue("typed", e.code, str(a.uri), e.message))
            return
        self.judge(plugin, codomain, a.value, expected, a.uri)

    def theory(self, t):
        plugin = self.plugin(t.uri, t.uri)
        if plugin is None:
            return
        for decl in t.declarations:
            if isinstance(decl, Constant):
                if decl.type is not None and decl.definiens is not None:
                    self.judge(plugin, t.uri, decl.definiens, decl.type, decl.uri)
                continue
            link = ImportLink(t.uri, decl.name)
            for a in decl.assignments:
                self.assignment(plugin, a, decl.domain, t.uri, link)

    def view(self, v):
        plugin = self.plugin(v.codomain, v.uri)
        if plugin is None:
            return
        for a in v.assignments:
            self.assignment(plugin, a, v.domain, v.codomain, ViewLink(v.uri))


def validate_typed(graph, plugins, modules=None):
    """Stage 3; ``modules`` restricts the check (default: every module in the graph)"""
    check = _TypedCheck(graph, _registry(plugins))
    targets = modules if modules is not None else graph.modules()
    for module in targets:
        if isinstance(module, Theory):
            check.theory(module)
        elif isinstance(module, View):
            check.view(module)
    return _finish("typed", "structural", "typed", check.errors, check.warnings,
                   stats={"judgments": check.checked})


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def merge_reports(requested, *reports):
    errors, warnings, stats = [], [], {}
    level = requested
    for report in reports:
        errors += report.errors
        warnings += report.warnings
        stats.update(report.stats)
        if not report.ok:
            level = report.level
            break
    return ValidationReport(level, requested, sorted(set(errors)), sorted(set(warnings)), stats)


def validate_documents(documents, level="structural", context=None, graph=None, plugins=()):
    """Run stages 2 and 3 over parsed documents.

    ``graph`` (optional) holds the already known documents needed to
    dereference symbols during typed validation.
    """
    atoms = [a for doc in documents for a in atomize(doc)]
    structural = validate_structural(atoms, context)
    if level == "structural" or not structural.ok:
        structural.requested = level
        return structural

    full = TheoryGraph(list(graph.documents.values()) if graph is not None else [])
    for doc in documents:
        if str(doc.base) not in full.documents:
            full.add_document(doc)
    own = [m for doc in documents for m in doc.modules]
    typed = validate_typed(full, plugins, own)
    return merge_reports("typed", structural, typed)


def validate_paths(paths, level="structural", context=None, graph=None, plugins=()):
    """The CLI's ``validate``: grammar first, then the requested stages"""
    if level not in LEVELS[1:]:
        raise ValueError(f"unknown validation level {level!r}")
    grammar, documents = validate_grammar(paths)
    if level == "grammar" or not grammar.ok:
        grammar.requested = level
        return grammar
    return validate_documents(documents, level, context, graph, plugins)
