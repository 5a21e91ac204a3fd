#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Flattening and Dereferencing
============================

The graph is only ever kept in modular form.  Induced declarations are
computed lazily when their qualified URI is dereferenced:

    Ring?add/grp/mon/mag/*   walks  add → grp → mon → mag  down to  Magma?*

and translated along the composed import morphism.  Results are memoized
per URI in the graph's cache.
"""

import logging
from dataclasses import dataclass, field

from errors import MorphismDomainMismatch, UnmappedSymbol, UnresolvedReference
from model import (
    META, Compose, ConstAssign, Constant, Identity, Import, ImportAssign, ImportLink, SymbolRef,
    Theory, View, ViewLink,
)
from uri import LocalName

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InducedConstant:
    uri: object
    origin: object
    via: object
    type: object = None
    definiens: object = None

    @property
    def name(self):
        return self.uri.sym


@dataclass(frozen=True)
class MorphismTable:
    """Normal form of a morphism: domain flat constant path → codomain term"""
    domain: object
    codomain: object
    map: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, MorphismTable):
            return NotImplemented
        return self.domain == other.domain and self.codomain == other.codomain and self.map == other.map

    def __hash__(self):
        return hash((self.domain, self.codomain, frozenset(self.map)))

    def differences(self, other):
        """Paths on which two tables disagree"""
        keys = set(self.map) | set(other.map)
        return sorted(k for k in keys if self.map.get(k) != other.map.get(k))


def is_constant(item):
    return isinstance(item, (Constant, InducedConstant))


# ---------------------------------------------------------------------------
# Import structure helpers
# ---------------------------------------------------------------------------

def _import(graph, theory_uri, name):
    theory = graph.module(theory_uri)
    if not isinstance(theory, Theory):
        return None
    target = LocalName.of(name)
    for decl in theory.declarations:
        if isinstance(decl, Import) and decl.name == target:
            return decl
    return None


def _step_domain(graph, theory_uri, name):
    if name == META:
        theory = graph.module(theory_uri)
        return theory.meta if isinstance(theory, Theory) else None
    imp = _import(graph, theory_uri, name)
    return imp.domain if imp is not None else None


def import_path_domain(graph, theory_uri, path):
    """Theory reached from ``theory_uri`` by following the import names in ``path``"""
    current = theory_uri
    for name in path.segments:
        current = _step_domain(graph, current, name)
        if current is None:
            return None
    return current


def _canonical_meta(graph, u):
    """``T?meta/x`` denotes the meta-theory's own ``M?x``"""
    while u.sym is not None and u.sym.head == META and u.sym.tail is not None:
        meta = _step_domain(graph, u.module_uri, META)
        if meta is None:
            return u
        u = meta.with_sym(u.sym.tail)
    return u


# ---------------------------------------------------------------------------
# Morphisms
# ---------------------------------------------------------------------------

def domain(graph, m):
    if isinstance(m, Identity):
        return m.theory
    if isinstance(m, ImportLink):
        d = import_path_domain(graph, m.theory, m.path)
        if d is None:
            raise UnresolvedReference(f"import path {m.path} not found", uri=str(m.theory))
        return d
    if isinstance(m, ViewLink):
        view = graph.module(m.uri)
        if not isinstance(view, View):
            raise UnresolvedReference("not a view", uri=str(m.uri))
        return view.domain
    first_codomain = codomain(graph, m.first)
    second_domain = domain(graph, m.second)
    if first_codomain != second_domain:
        raise MorphismDomainMismatch(
            f"cannot compose: codomain {first_codomain} differs from domain {second_domain}")
    return domain(graph, m.first)


def codomain(graph, m):
    if isinstance(m, (Identity, ImportLink)):
        return m.theory
    if isinstance(m, ViewLink):
        view = graph.module(m.uri)
        if not isinstance(view, View):
            raise UnresolvedReference("not a view", uri=str(m.uri))
        return view.codomain
    domain(graph, m)
    return codomain(graph, m.second)


def _assigned(graph, assignments, domain_uri, path):
    """Value an instantiation list gives to ``path``, or None"""
    best = None
    for a in assignments:
        if isinstance(a, ConstAssign) and a.target == path:
            return a.value
        if isinstance(a, ImportAssign) and len(path) > len(a.target) and path.startswith(a.target):
            if best is None or len(a.target) > len(best.target):
                best = a
    if best is None:
        return None
    source_theory = import_path_domain(graph, domain_uri, best.target)
    rest = LocalName(path.segments[len(best.target):])
    return translate_symbol(graph, best.value, source_theory.with_sym(rest))


def _translate_link(graph, theory_uri, name, u):
    if name == META:
        return SymbolRef(u)
    imp = _import(graph, theory_uri, name)
    if imp is None:
        raise UnresolvedReference(f"no import {name!r}", uri=str(theory_uri))
    if u.module_uri != imp.domain or u.sym is None:
        return SymbolRef(u)
    if u.sym.head == META:
        return SymbolRef(_canonical_meta(graph, u))
    value = _assigned(graph, imp.assignments, imp.domain, u.sym)
    if value is not None:
        return value
    return SymbolRef(theory_uri.with_sym(LocalName.of(name) / u.sym))


def _translate_view(graph, view_uri, u):
    view = graph.module(view_uri)
    if not isinstance(view, View):
        raise UnresolvedReference("not a view", uri=str(view_uri))
    if u.module_uri != view.domain or u.sym is None:
        return SymbolRef(u)
    if u.sym.head == META:
        return SymbolRef(_canonical_meta(graph, u))
    value = _assigned(graph, view.assignments, view.domain, u.sym)
    if value is not None:
        return value
    item = deref(graph, u)
    if is_constant(item) and item.definiens is not None:
        return apply_morphism(graph, ViewLink(view_uri), item.definiens)
    raise UnmappedSymbol(f"view {view_uri} assigns nothing to {u.sym}", uri=str(u))


def translate_symbol(graph, m, u):
    """Image of the symbol ``u`` under ``m`` (a Term)"""
    if isinstance(m, Identity):
        return SymbolRef(u)
    if isinstance(m, Compose):
        return apply_morphism(graph, m.second, translate_symbol(graph, m.first, u))
    if isinstance(m, ViewLink):
        return _translate_view(graph, m.uri, u)

    # T?i1/…/in is the composite  in ; … ; i1
    links = []
    current = m.theory
    for name in m.path.segments:
        links.append((current, name))
        current = _step_domain(graph, current, name)
        if current is None:
            raise UnresolvedReference(f"import path {m.path} not found", uri=str(m.theory))
    term = SymbolRef(u)
    for theory_uri, name in reversed(links):
        term = term.map_symbols(lambda s, t=theory_uri, n=name: _translate_link(graph, t, n, s))
    return term


def apply_morphism(graph, m, t):
    """Translate term ``t`` along ``m``; meta-theory symbols stay untouched"""
    if t is None:
        return None
    return t.map_symbols(lambda u: translate_symbol(graph, m, u))


def normalize(graph, m):
    """Total table over the domain's flat undefined constants"""
    source = domain(graph, m)
    target = codomain(graph, m)
    table = {}
    for item in flatten_theory(graph, source):
        if item.definiens is None:
            table[item.uri.sym] = translate_symbol(graph, m, item.uri)
    return MorphismTable(source, target, table)


# ---------------------------------------------------------------------------
# Dereferencing
# ---------------------------------------------------------------------------

def deref(graph, uri, use_cache=True):
    """Syntactic item, induced constant, module, or None.

    ``T?imp/c`` is always the induced constant, also when ``imp`` assigns a
    value to ``c``; the value becomes its definiens.
    """
    if not use_cache:
        return _deref(graph, uri, False)
    key = ("deref", uri)
    if key in graph.cache:
        logger.debug("deref cache hit %s", uri)
        return graph.cache[key]
    value = _deref(graph, uri, True)
    return graph.cache.setdefault(key, value)


def is_instantiation(graph, item):
    """Constant assignment inside a theory's import; it shares its URI with the induced constant"""
    return (isinstance(item, ConstAssign)
            and isinstance(graph.module(item.uri.module_uri), Theory))


def _deref(graph, uri, use_cache):
    item = graph.lookup(uri)
    if item is not None and not is_instantiation(graph, item):
        return item
    if uri.sym is None or len(uri.sym) < 2:
        return None
    theory = graph.module(uri.module_uri)
    if not isinstance(theory, Theory):
        return None

    head, rest = uri.sym.head, uri.sym.tail
    source_theory = _step_domain(graph, theory.uri, head)
    if source_theory is None:
        return None
    inner = deref(graph, source_theory.with_sym(rest), use_cache)
    if not is_constant(inner):
        return None

    if isinstance(inner, InducedConstant):
        origin, inner_path = inner.origin, inner.via.path
    else:
        origin, inner_path = inner.uri, None
    path = LocalName.of(head) if inner_path is None else LocalName.of(head) / inner_path
    via = ImportLink(theory.uri, path)

    if head == META:
        return InducedConstant(uri, origin, via, inner.type, inner.definiens)

    link = ImportLink(theory.uri, LocalName.of(head))
    imp = _import(graph, theory.uri, head)
    definiens = _assigned(graph, imp.assignments, imp.domain, rest)
    if definiens is None:
        definiens = apply_morphism(graph, link, inner.definiens)
    return InducedConstant(uri, origin, via, apply_morphism(graph, link, inner.type), definiens)


def flatten_theory(graph, theory_uri, include_meta=False):
    """Every syntactic and induced constant of a theory, depth-first in declaration order"""
    key = ("flat", theory_uri, include_meta)
    if key in graph.cache:
        return list(graph.cache[key])

    theory = graph.module(theory_uri)
    if not isinstance(theory, Theory):
        return []

    result = []
    if include_meta and theory.meta is not None:
        for item in flatten_theory(graph, theory.meta, True):
            result.append(deref(graph, theory_uri.with_sym(LocalName.of(META) / item.uri.sym)))
    for decl in theory.declarations:
        if isinstance(decl, Constant):
            result.append(decl)
            continue
        for item in flatten_theory(graph, decl.domain):
            result.append(deref(graph, theory_uri.with_sym(decl.name / item.uri.sym)))

    logger.debug("Flattened %s: %d constants", theory_uri, len(result))
    return list(graph.cache.setdefault(key, tuple(result)))
