import time

import pytest

from conftest import alg, fol, inst, views
from errors import MorphismDomainMismatch, UnmappedSymbol
from flatten import (
    InducedConstant, apply_morphism, codomain, deref, domain, flatten_theory, is_constant, normalize,
    translate_symbol,
)
from model import (
    Apply, Bind, Compose, Constant, Identity, ImportLink, SymbolRef, TheoryGraph, Var, ViewLink,
)
from reader import parse_document
from uri import LocalName, parse_uri

ADDITION = alg("Ring?add/grp/mon/mag/*")
MULTIPLICATION = alg("Ring?mult/mag/*")


def test_syntactic_constant_is_itself(graph):
    star = deref(graph, alg("Magma?*"))
    assert isinstance(star, Constant)
    assert star.uri == alg("Magma?*")


def test_induced_addition(graph):
    add = deref(graph, ADDITION)
    assert isinstance(add, InducedConstant)
    assert add.origin == alg("Magma?*")
    assert add.via == ImportLink(alg("Ring"), LocalName.of("add", "grp", "mon", "mag"))
    arrow = Apply(SymbolRef(fol("arrow")), (SymbolRef(fol("i")),) * 3)
    assert add.type == arrow
    assert add.definiens is None


def test_addition_and_multiplication_are_distinct(graph):
    add, mult = deref(graph, ADDITION), deref(graph, MULTIPLICATION)
    assert add.origin == mult.origin
    assert add.uri != mult.uri
    assert add != mult


def test_distributivity_through_dist(graph):
    ldist = deref(graph, alg("Ring?dist/ldist"))
    symbols = set(ldist.type.symbols())
    assert MULTIPLICATION in symbols and ADDITION in symbols
    assert alg("Distrib?mag1/*") not in symbols
    assert fol("forall") in symbols and fol("equal") in symbols


def test_instantiated_path_carries_value(graph):
    mag1 = deref(graph, alg("Ring?dist/mag1/*"))
    assert mag1.definiens == SymbolRef(MULTIPLICATION)
    mag2 = deref(graph, alg("Ring?dist/mag2/*"))
    assert mag2.definiens == SymbolRef(ADDITION)


def test_unknown_paths(graph):
    assert deref(graph, alg("Ring?add/nothing/*")) is None
    assert deref(graph, alg("Ring?mult/mag/nothing")) is None
    assert deref(graph, alg("Nowhere?x/y")) is None


def test_deref_is_memoized(graph):
    assert deref(graph, ADDITION) is deref(graph, ADDITION)
    assert ("deref", ADDITION) in graph.cache


def test_view_translation(graph):
    v1 = ViewLink(views("v1"))
    assert translate_symbol(graph, v1, alg("CGroup?grp/mon/mag/*")) == SymbolRef(alg("Integers?+"))


def test_meta_symbols_are_not_translated(graph):
    v1 = ViewLink(views("v1"))
    comm = deref(graph, alg("CGroup?comm"))
    image = apply_morphism(graph, v1, comm.type)
    assert isinstance(image, Bind)
    assert image.binder == SymbolRef(fol("forall"))
    assert image == deref(graph, alg("Integers?plus-comm")).type


def test_commuting_import_paths(graph):
    ring = alg("Ring")
    left = normalize(graph, ImportLink(ring, LocalName.of("dist", "mag1")))
    right = normalize(graph, ImportLink(ring, LocalName.of("mult", "mag")))
    assert left.domain == alg("Magma") and left.codomain == ring
    assert left == right
    other = normalize(graph, ImportLink(ring, LocalName.of("dist", "mag2")))
    assert other != left
    assert other.differences(left) == [LocalName.of("*")]


def test_view_restricted_along_import(graph):
    composed = Compose(ImportLink(alg("Ring"), LocalName.of("add")), ViewLink(views("v2")))
    assert normalize(graph, composed) == normalize(graph, ViewLink(views("v1")))


def test_identity_table(graph):
    table = normalize(graph, Identity(alg("Magma")))
    assert table.map == {LocalName.of("*"): SymbolRef(alg("Magma?*"))}


def test_domain_and_codomain(graph):
    m = Compose(ImportLink(alg("Ring"), LocalName.of("add")), ViewLink(views("v2")))
    assert domain(graph, m) == alg("CGroup")
    assert codomain(graph, m) == alg("Integers")
    bad = Compose(ViewLink(views("v1")), ImportLink(alg("Ring"), LocalName.of("add")))
    with pytest.raises(MorphismDomainMismatch):
        domain(graph, bad)


def test_unmapped_symbol(graph):
    graph.add_document(parse_document(
        b'<omdoc base="http://a.org/v"><view name="w" from="http://cds.omdoc.org/math/algebra1.omdoc?Magma"'
        b' to="http://cds.omdoc.org/math/algebra1.omdoc?Integers"/></omdoc>'))
    with pytest.raises(UnmappedSymbol):
        translate_symbol(graph, ViewLink(parse_uri("http://a.org/v?w")), alg("Magma?*"))


def test_flatten_magma(graph):
    assert flatten_theory(graph, alg("Magma")) == [deref(graph, alg("Magma?*"))]


def test_flatten_ring(graph):
    flat = flatten_theory(graph, alg("Ring"))
    paths = [str(c.uri.sym) for c in flat]
    assert paths == [
        "add/grp/mon/mag/*", "add/grp/mon/e", "add/grp/inv", "add/comm",
        "mult/mag/*", "mult/e",
        "dist/mag1/*", "dist/mag2/*", "dist/ldist",
    ]
    assert ADDITION in {c.uri for c in flat} and MULTIPLICATION in {c.uri for c in flat}


def test_flatten_with_meta(graph):
    flat = flatten_theory(graph, alg("Magma"), include_meta=True)
    assert [str(c.uri.sym) for c in flat][:5] == ["meta/i", "meta/o", "meta/arrow", "meta/equal", "meta/forall"]
    assert deref(graph, alg("Magma?meta/forall")).origin == fol("forall")


# ---------------------------------------------------------------------------
# Doubling chain: C(k+1) imports C(k) twice
# ---------------------------------------------------------------------------

def chain_document(n):
    parts = ['<omdoc base="http://example.org/chain.omdoc">',
             '<theory name="C0"><constant name="c"/></theory>']
    for k in range(1, n + 1):
        parts.append(f'<theory name="C{k}"><import name="l" from="?C{k - 1}"/>'
                     f'<import name="r" from="?C{k - 1}"/></theory>')
    parts.append("</omdoc>")
    return parse_document("".join(parts).encode("utf-8"))


def eager_flatten(doc, name):
    """Independent oracle: copy every declaration of every import, recursively"""
    theory = doc.module(LocalName.of(name))
    paths = []
    for decl in theory.declarations:
        if isinstance(decl, Constant):
            paths.append(str(decl.uri.sym))
        else:
            inner = eager_flatten(doc, str(decl.domain.mod))
            paths += [f"{decl.name}/{p}" for p in inner]
    return paths


@pytest.mark.parametrize("n", range(1, 11))
def test_doubling_chain(n):
    doc = chain_document(n)
    graph = TheoryGraph([doc])
    top = parse_uri(f"http://example.org/chain.omdoc?C{n}")
    flat = flatten_theory(graph, top)
    assert len(flat) == 2 ** n
    assert [str(c.uri.sym) for c in flat] == eager_flatten(doc, f"C{n}")
    # the modular source stays linear
    assert sum(len(m.declarations) for m in doc.modules) == 2 * n + 1


def test_doubling_chain_speed():
    graph = TheoryGraph([chain_document(10)])
    start = time.perf_counter()
    flatten_theory(graph, parse_uri("http://example.org/chain.omdoc?C10"))
    assert time.perf_counter() - start < 5


def test_apply_morphism_keeps_variables(graph):
    t = Apply(SymbolRef(alg("CGroup?grp/mon/mag/*")), (Var("x"), Var("y")))
    image = apply_morphism(graph, ViewLink(views("v1")), t)
    assert image == Apply(SymbolRef(alg("Integers?+")), (Var("x"), Var("y")))


# ---------------------------------------------------------------------------
# Imports that instantiate symbols
# ---------------------------------------------------------------------------

@pytest.fixture
def instantiated(graph, instances_doc):
    graph.add_document(instances_doc)
    return graph


def test_instantiated_symbol_is_an_induced_constant(instantiated):
    star = deref(instantiated, inst("NatPlus?mag/*"))
    assert isinstance(star, InducedConstant)
    assert star.origin == alg("Magma?*")
    assert star.definiens == SymbolRef(inst("NatPlus?plus"))
    assert star.type == deref(instantiated, alg("Magma?*")).type


def test_flatten_with_instantiation(instantiated):
    flat = flatten_theory(instantiated, inst("NatPlus"))
    assert [str(c.uri.sym) for c in flat] == ["plus", "mag/*", "add"]
    assert all(is_constant(c) for c in flat)


def test_normalize_with_instantiation(instantiated):
    identity = normalize(instantiated, Identity(inst("NatPlus")))
    assert identity.map == {LocalName.of("plus"): SymbolRef(inst("NatPlus?plus"))}
    link = normalize(instantiated, ImportLink(inst("NatPlus"), LocalName.of("mag")))
    assert link.map == {LocalName.of("*"): SymbolRef(inst("NatPlus?plus"))}
