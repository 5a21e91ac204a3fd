import pytest

from conftest import alg
from errors import DuplicateUri, OrphanAtom
from model import (
    Apply, AtomicDecl, Bind, Constant, Document, SymbolRef, TheoryGraph, TheoryHeader, Var, alpha_equal,
    assemble, atomize, lookup, rename_bound, rename_references,
)
from uri import LocalName, parse_uri

X = parse_uri("http://a.org/d?T?f")


def test_alpha_equivalence():
    a = Bind(SymbolRef(X), ("x",), Apply(SymbolRef(X), (Var("x"), Var("y"))))
    b = Bind(SymbolRef(X), ("z",), Apply(SymbolRef(X), (Var("z"), Var("y"))))
    c = Bind(SymbolRef(X), ("y",), Apply(SymbolRef(X), (Var("y"), Var("y"))))
    assert a == b
    assert hash(a) == hash(b)
    assert a != c
    assert alpha_equal(rename_bound(a, "x", "w"), a)


def test_bound_variables_shadow():
    inner = Bind(SymbolRef(X), ("x",), Var("x"))
    outer1 = Bind(SymbolRef(X), ("x",), inner)
    outer2 = Bind(SymbolRef(X), ("y",), Bind(SymbolRef(X), ("x",), Var("x")))
    assert outer1 == outer2


def test_symbols_in_preorder(algebra_doc):
    ring_ldist_type = algebra_doc.module(LocalName.of("Distrib")).constants()[0].type
    symbols = ring_ldist_type.symbols()
    assert symbols[0] == parse_uri("http://cds.omdoc.org/logics/fol.omdoc?FOL?forall")
    assert alg("Distrib?mag1/*") in symbols and alg("Distrib?mag2/*") in symbols


def test_lookup(graph):
    star = lookup(graph, alg("Magma?*"))
    assert isinstance(star, Constant)
    assert lookup(graph, alg("Ring?add/grp/mon/mag/*")) is None
    assert lookup(graph, alg("Ring")).name == LocalName.of("Ring")
    assert isinstance(lookup(graph, parse_uri("http://cds.omdoc.org/math/algebra1.omdoc")), Document)


def test_atom_count(algebra_doc):
    atoms = atomize(algebra_doc)
    headers = [a for a in atoms if a.is_header]
    assert len(headers) == 7
    # 7 headers, 12 constants, 8 imports, 2 instantiations, 1 notation
    assert len(atoms) == 30


def test_atomize_assemble_round_trip(algebra_doc, views_doc):
    atoms = atomize(algebra_doc) + atomize(views_doc)
    assert assemble(atoms) == TheoryGraph([algebra_doc, views_doc])


def test_assemble_rejects_orphans(algebra_doc):
    atoms = atomize(algebra_doc)
    child = next(a for a in atoms if not a.is_header)
    with pytest.raises(OrphanAtom):
        assemble([child])


def test_assemble_rejects_duplicates(algebra_doc):
    atoms = atomize(algebra_doc)
    with pytest.raises(DuplicateUri):
        assemble(atoms + [atoms[1]])


def test_duplicate_declaration_in_graph(algebra_doc):
    with pytest.raises(DuplicateUri):
        TheoryGraph([algebra_doc, algebra_doc])


def test_rename_references(algebra_doc):
    renamed = rename_references(algebra_doc, alg("Magma"), alg("BinOp"))
    names = [str(m.name) for m in renamed.modules]
    assert names[0] == "BinOp"
    monoid = renamed.module(LocalName.of("Monoid"))
    assert monoid.imports()[0].domain == alg("BinOp")
    assert renamed.modules[0].notations[0].applies_to == alg("BinOp?*")


def test_header_atom_payload(algebra_doc):
    first = atomize(algebra_doc)[0]
    assert first == AtomicDecl(alg("Magma"), TheoryHeader(parse_uri("http://cds.omdoc.org/logics/fol.omdoc?FOL")))
