"""Shared fixtures: the FOL meta-theory, the algebraic hierarchy and its views."""

import os

import pytest

from model import TheoryGraph
from reader import read_document
from uri import parse_uri

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "tests", "fixtures")

FOL_PATH = os.path.join(FIXTURES, "fol.omdoc")
ALGEBRA_PATH = os.path.join(FIXTURES, "algebra1.omdoc")
VIEWS_PATH = os.path.join(FIXTURES, "views1.omdoc")
INSTANCES_PATH = os.path.join(FIXTURES, "instances.omdoc")

FOL = "http://cds.omdoc.org/logics/fol.omdoc?FOL"
ALGEBRA = "http://cds.omdoc.org/math/algebra1.omdoc"
VIEWS = "http://cds.omdoc.org/math/views1.omdoc"
INSTANCES = "http://cds.omdoc.org/math/instances.omdoc"


def alg(text):
    """URI inside the algebra document, e.g. alg("Ring?mult")"""
    return parse_uri(f"{ALGEBRA}?{text}")


def views(text):
    return parse_uri(f"{VIEWS}?{text}")


def inst(text):
    return parse_uri(f"{INSTANCES}?{text}")


def fol(sym):
    return parse_uri(f"{FOL}?{sym}")


@pytest.fixture
def fol_doc():
    return read_document(FOL_PATH)


@pytest.fixture
def algebra_doc():
    return read_document(ALGEBRA_PATH)


@pytest.fixture
def views_doc():
    return read_document(VIEWS_PATH)


@pytest.fixture
def instances_doc():
    return read_document(INSTANCES_PATH)


@pytest.fixture
def graph(fol_doc, algebra_doc, views_doc):
    return TheoryGraph([fol_doc, algebra_doc, views_doc])


def _bad(body):
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<omdoc base="http://example.org/bad.omdoc">{body}</omdoc>\n').encode("utf-8")


A = ALGEBRA

# (name, expected code, document bytes); each is rejected against fol + algebra + views
INVALID_DOCUMENTS = [
    ("duplicate-constant", "DuplicateUri", _bad(
        '<theory name="T"><constant name="c"/><constant name="c"/></theory>')),
    ("duplicate-module", "DuplicateUri", _bad(
        '<theory name="T"/><theory name="T"/>')),
    ("unresolved-symbol", "UnresolvedReference", _bad(
        f'<theory name="T"><import name="m" from="{A}?Magma"/>'
        f'<constant name="c"><type><OMS path="{A}?Magma?nothing"/></type></constant></theory>')),
    ("unresolved-import", "UnresolvedReference", _bad(
        f'<theory name="T"><import name="m" from="{A}?Nothing"/></theory>')),
    ("import-cycle", "ImportCycle", _bad(
        '<theory name="T"><import name="u" from="?U"/></theory>'
        '<theory name="U"><import name="t" from="?T"/></theory>')),
    ("meta-cycle", "ImportCycle", _bad(
        '<theory name="T" meta="?T"/>')),
    ("view-from-nowhere", "UnresolvedReference", _bad(
        f'<view name="v" from="{A}?Nothing" to="{A}?Integers"/>')),
    ("unknown-assignment-target", "UnresolvedReference", _bad(
        f'<view name="v" from="{A}?Magma" to="{A}?Integers">'
        f'<assign symbol="nothing"><OMS path="{A}?Integers?+"/></assign></view>')),
    ("wrong-morphism-domain", "MorphismDomainMismatch", _bad(
        f'<theory name="R"><import name="mult" from="{A}?Monoid"/>'
        f'<import name="dist" from="{A}?Distrib"><assign import="mag1" morphism="??mult"/></import></theory>')),
    ("bad-composition", "MorphismDomainMismatch", _bad(
        f'<theory name="R"><import name="add" from="{A}?CGroup"/>'
        f'<import name="dist" from="{A}?Distrib">'
        f'<assign import="mag1" morphism="http://cds.omdoc.org/math/views1.omdoc?v1 ; '
        f'http://cds.omdoc.org/math/views1.omdoc?v1"/></import></theory>')),
    ("partial-view", "UnmappedSymbol", _bad(
        f'<view name="partial" from="{A}?Monoid" to="{A}?Integers">'
        f'<assign symbol="e"><OMS path="{A}?Integers?0"/></assign></view>')),
    ("overlapping-view", "DuplicateUri", _bad(
        f'<view name="m" from="{A}?Magma" to="{A}?Integers">'
        f'<assign symbol="*"><OMS path="{A}?Integers?*"/></assign></view>'
        f'<view name="o" from="{A}?Monoid" to="{A}?Integers">'
        f'<assign import="mag" morphism="?m"/>'
        f'<assign symbol="mag/*"><OMS path="{A}?Integers?+"/></assign>'
        f'<assign symbol="e"><OMS path="{A}?Integers?0"/></assign></view>')),
]
