import os
import threading
import time

import pytest

from abox import extract_abox, format_facts, parse_facts, recover_structure, skeleton
from checker import validate_structural
from conftest import ALGEBRA, ALGEBRA_PATH, FOL, FOL_PATH, INVALID_DOCUMENTS, VIEWS, VIEWS_PATH, alg, views
from errors import NameClash, NotFound, RevisionUnknown, UnknownModule, ValidationRejected
from flatten import InducedConstant
from model import TheoryGraph, atomize, rename_references
from reader import read_document
from store import DocumentStore, ReadWriteLock, mirror_path
from uri import parse_uri

FOL_DOC = FOL.split("?")[0]


def _read(path):
    with open(path, "rb") as f:
        return f.read()


def _doc(base, body):
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<omdoc base="{base}">{body}</omdoc>\n').encode("utf-8")


def _padding(k):
    return (f"pad{k}.omdoc", _doc(f"http://example.org/pad/{k}.omdoc",
                                   f'<theory name="P{k}"><constant name="c"/></theory>'))


DEPENDENT = ("b.omdoc", _doc(
    "http://example.org/b.omdoc",
    f'<theory name="B" meta="{FOL}"><import name="r" from="{ALGEBRA}?Ring"/>'
    f'<constant name="zero"><type><OMS path="{FOL}?i"/></type>'
    f'<definition><OMS path="{ALGEBRA}?Ring?add/grp/mon/e"/></definition></constant></theory>'))


WARMUP = ("a.omdoc", _doc(
    "http://example.org/a.omdoc",
    f'<theory name="A" meta="{FOL}"><import name="m" from="{ALGEBRA}?Monoid"/></theory>'))


@pytest.fixture
def store(tmp_path):
    return DocumentStore.init(str(tmp_path / "store"))


@pytest.fixture
def filled(store):
    store.commit([FOL_PATH, ALGEBRA_PATH, VIEWS_PATH], "fixtures", "tester")
    return store


def test_init(store):
    assert store.revision == 0
    assert store.documents() == []
    assert store.status()["documents"] == 0
    with pytest.raises(NotFound):
        DocumentStore(os.path.join(store.root, "elsewhere"))


def test_init_is_idempotent(store):
    again = DocumentStore.init(store.root)
    assert again.revision == 0


def test_commit_writes_mirror_and_abox(store, algebra_doc):
    store.commit([FOL_PATH])
    revision = store.commit([ALGEBRA_PATH], "algebra", "tester")
    assert revision.number == 2
    assert revision.changed == [ALGEBRA]
    assert revision.author == "tester"
    assert mirror_path(ALGEBRA) == "cds.omdoc.org/math/algebra1.omdoc"
    assert _read(os.path.join(store.root, "docs", "cds.omdoc.org", "math", "algebra1.omdoc")) == _read(ALGEBRA_PATH)
    abox_file = os.path.join(store.root, "abox", "cds.omdoc.org", "math", "algebra1.omdoc.abox")
    assert os.path.exists(abox_file)
    assert store.abox(ALGEBRA) == format_facts(extract_abox(algebra_doc))
    assert store.documents() == sorted([FOL_DOC, ALGEBRA])


def test_commit_needs_its_dependencies(store):
    with pytest.raises(ValidationRejected) as e:
        store.commit([ALGEBRA_PATH])
    assert "UnresolvedReference" in e.value.report.codes()
    assert store.revision == 0


def test_grammar_errors_reject(filled):
    before = filled.state_hash()
    with pytest.raises(ValidationRejected) as e:
        filled.commit([("broken.omdoc", b"<omdoc base='http://example.org/x.omdoc'><theory/></omdoc>")])
    assert e.value.report.codes() == ["GrammarError"]
    assert filled.state_hash() == before


def test_same_document_twice_in_one_commit(filled):
    with pytest.raises(ValidationRejected) as e:
        filled.commit([DEPENDENT, DEPENDENT])
    assert e.value.report.codes() == ["DuplicateUri"]


@pytest.mark.parametrize("name,code,data", INVALID_DOCUMENTS, ids=[d[0] for d in INVALID_DOCUMENTS])
def test_rejected_commit_leaves_store_unchanged(filled, name, code, data):
    before = filled.state_hash()
    with pytest.raises(ValidationRejected) as e:
        filled.commit([(f"{name}.omdoc", data)])
    assert code in e.value.report.codes()
    assert filled.state_hash() == before
    assert filled.revision == 1


def test_separate_compilation(store):
    store.commit([FOL_PATH, ALGEBRA_PATH])
    before = store.parse_count
    opened = store.documents_opened
    store.commit([DEPENDENT])
    assert store.parse_count - before == 1
    assert store.documents_opened == opened
    assert store.query("http://example.org/b.omdoc?B", "Imports") == {alg("Ring")}


def test_separate_compilation_ignores_store_size(store):
    store.commit([FOL_PATH, ALGEBRA_PATH])
    store.commit([_padding(k) for k in range(100)], "padding")
    store.commit([WARMUP], "warm-up")
    before = store.parse_count
    start = time.perf_counter()
    store.commit([DEPENDENT])
    assert store.parse_count - before == 1
    assert time.perf_counter() - start < 0.1


def test_incremental_index_matches_fresh_build(tmp_path, filled):
    fresh = DocumentStore.init(str(tmp_path / "fresh"))
    fresh.commit([FOL_PATH])
    fresh.commit([ALGEBRA_PATH])
    fresh.commit([VIEWS_PATH])
    for name in sorted(os.listdir(filled.path("index"))):
        assert _read(filled.path("index", name)) == _read(fresh.path("index", name)), name


def test_recommitting_a_document(filled):
    index_before = {n: _read(filled.path("index", n)) for n in os.listdir(filled.path("index"))}
    revision = filled.commit([ALGEBRA_PATH], "again")
    assert revision.number == 2
    assert {n: _read(filled.path("index", n)) for n in os.listdir(filled.path("index"))} == index_before


def test_typed_commit(tmp_path):
    store = DocumentStore.init(str(tmp_path / "typed"))
    store.config.typed_validation = True
    store.commit([FOL_PATH, ALGEBRA_PATH])
    store.commit([VIEWS_PATH])
    bad = _doc("http://example.org/w.omdoc",
               f'<view name="w" from="{ALGEBRA}?Monoid" to="{ALGEBRA}?Integers">'
               f'<assign symbol="mag/*"><OMS path="{ALGEBRA}?Integers?-"/></assign>'
               f'<assign symbol="e"><OMS path="{ALGEBRA}?Integers?0"/></assign></view>')
    with pytest.raises(ValidationRejected) as e:
        store.commit([("w.omdoc", bad)])
    assert e.value.report.codes() == ["TypeMismatch"]
    assert store.revision == 2


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------

def test_retrieve_document_bytes(filled):
    assert filled.retrieve(ALGEBRA) == _read(ALGEBRA_PATH)


def test_retrieve_induced_constant(filled):
    item = filled.retrieve(f"{ALGEBRA}?Ring?add/grp/mon/mag/*")
    assert isinstance(item, InducedConstant)
    assert item.origin == alg("Magma?*")


def test_retrieve_loads_only_the_cone(filled):
    opened = filled.documents_opened
    filled.retrieve(f"{ALGEBRA}?Magma?*")
    # algebra and fol, never the views
    assert filled.documents_opened - opened == 2


def test_retrieve_missing(filled):
    with pytest.raises(NotFound):
        filled.retrieve(f"{ALGEBRA}?Ring?nothing")
    with pytest.raises(NotFound):
        filled.retrieve("http://example.org/none.omdoc")


def test_retrieve_at_revision(store):
    store.commit([FOL_PATH, ALGEBRA_PATH])
    store.rename_module(alg("Magma"), "BinOp")
    assert store.retrieve(f"{ALGEBRA}?Magma?*", at=1).uri == alg("Magma?*")
    with pytest.raises(NotFound):
        store.retrieve(f"{ALGEBRA}?Magma?*")
    with pytest.raises(RevisionUnknown):
        store.retrieve(f"{ALGEBRA}?Magma?*", at=7)


def test_history(filled):
    filled.commit([DEPENDENT], "dependent")
    history = filled.history()
    assert [r.number for r in history] == [0, 1, 2]
    assert history[1].changed == sorted([FOL_DOC, ALGEBRA, VIEWS])
    assert history[2].message == "dependent"
    with pytest.raises(RevisionUnknown):
        filled.manifest(3)
    assert filled.documents(0) == []


def test_query_and_cone(filled):
    assert filled.query(alg("Ring"), "(Imports)+") == {
        alg("CGroup"), alg("Group"), alg("Monoid"), alg("Magma"), alg("Distrib")}
    assert filled.cone(alg("Magma"), forward=True, transitive=False) == {
        alg("Magma"), alg("Monoid"), alg("Distrib")}
    with pytest.raises(UnknownModule):
        filled.cone("http://example.org/x.omdoc?Nothing")


def test_catalog_local_location(filled):
    folder = filled.path("local")
    os.makedirs(folder)
    with open(os.path.join(folder, "x.omdoc"), "wb") as f:
        f.write(b"<omdoc/>")
    filled.add_catalog_entry("http://example.org/", "local/")
    assert filled.locate("http://example.org/x.omdoc") == ("local/", "x.omdoc")
    assert filled.document_bytes("http://example.org/x.omdoc") == b"<omdoc/>"
    assert filled.locate("http://elsewhere.org/x.omdoc") is None


def test_catalog_remote_location(filled, monkeypatch):
    class FakeResponse:
        status_code = 200
        content = b"<omdoc/>"

    seen = []

    def fake_get(url, timeout):
        seen.append(url)
        return FakeResponse()

    monkeypatch.setattr("store.requests.get", fake_get)
    filled.add_catalog_entry("http://example.org/", "https://mirror.example.org/docs/")
    assert filled.document_bytes("http://example.org/x.omdoc") == b"<omdoc/>"
    assert seen == ["https://mirror.example.org/docs/x.omdoc"]

    FakeResponse.status_code = 404
    with pytest.raises(NotFound):
        filled.document_bytes("http://example.org/x.omdoc")


# ---------------------------------------------------------------------------
# Renaming
# ---------------------------------------------------------------------------

def test_rename_patches_dependents(filled):
    revision = filled.rename_module(alg("Magma"), "BinOp", author="tester")
    assert revision.number == 2
    assert revision.changed == [ALGEBRA]
    index = filled.index()
    assert index.type_of(alg("BinOp")) == "theory"
    assert alg("Magma") not in index.modules()
    assert filled.query(alg("Monoid"), "Imports") == {alg("BinOp")}
    assert filled.retrieve(f"{ALGEBRA}?Ring?add/grp/mon/mag/*").origin == alg("BinOp?*")
    renamed = read_document(filled.doc_path(ALGEBRA))
    assert renamed.module(parse_uri(f"{ALGEBRA}?BinOp").mod) is not None


def test_rename_clash(filled):
    before = filled.state_hash()
    with pytest.raises(NameClash):
        filled.rename_module(alg("Magma"), "Monoid")
    with pytest.raises(UnknownModule):
        filled.rename_module(alg("Nothing"), "Other")
    assert filled.state_hash() == before


# ---------------------------------------------------------------------------
# Notation collection
# ---------------------------------------------------------------------------

def test_collect_notations(filled):
    opened = filled.documents_opened
    notations = filled.collect_notations(alg("Ring?add"))
    assert filled.documents_opened - opened == 2
    operators = {n.operator for n in notations}
    assert {"*", "=", "→", "∀"} <= operators


def test_collect_notations_ignores_store_size(filled):
    filled.commit([_padding(k) for k in range(100)], "padding")
    opened = filled.documents_opened
    filled.collect_notations(alg("Ring"))
    assert filled.documents_opened - opened == 2


def test_collect_notations_of_unknown_module(filled):
    with pytest.raises(UnknownModule):
        filled.collect_notations("http://example.org/x.omdoc?Nothing?c")


def test_rename_to_current_name(filled):
    before = {n: _read(filled.path("index", n)) for n in os.listdir(filled.path("index"))}
    revision = filled.rename_module(alg("Magma"), "Magma")
    assert revision.number == 2
    assert revision.changed == []
    assert filled.documents() == filled.documents(1)
    assert {n: _read(filled.path("index", n)) for n in os.listdir(filled.path("index"))} == before


def test_store_validates_after_rename(filled):
    filled.rename_module(alg("Magma"), "BinOp")
    atoms = [a for doc in filled.graph().documents.values() for a in atomize(doc)]
    assert validate_structural(atoms).ok


def test_rename_keeps_the_recovered_structure(filled):
    before = filled.graph()
    filled.rename_module(alg("Magma"), "BinOp")
    expected = skeleton(TheoryGraph([rename_references(d, alg("Magma"), alg("BinOp"))
                                     for d in before.documents.values()]))
    facts = frozenset().union(*(parse_facts(filled.abox(d)) for d in filled.documents()))
    assert recover_structure(facts) == expected


STYLE = ("style.omdoc", _doc(
    "http://example.org/style.omdoc",
    f'<style name="S"><notation for="{ALGEBRA}?Magma?*" role="application" fixity="infix" operator="∘"/></style>'))


def test_rename_patches_style_notations(filled):
    filled.commit([STYLE], "style")
    revision = filled.rename_module(alg("Magma"), "BinOp")
    assert revision.changed == sorted([ALGEBRA, "http://example.org/style.omdoc"])
    style = filled.open_document("http://example.org/style.omdoc").modules[0]
    assert style.notations[0].applies_to == alg("BinOp?*")


# ---------------------------------------------------------------------------
# Concurrent access
# ---------------------------------------------------------------------------

def test_commit_waits_for_readers(store):
    store.commit([FOL_PATH, ALGEBRA_PATH])
    inside, release = threading.Event(), threading.Event()
    seen = []

    def read():
        with store.reading():
            inside.set()
            release.wait(5)
            seen.append((store.revision, store.index().modules()))

    reader = threading.Thread(target=read)
    reader.start()
    assert inside.wait(5)
    writer = threading.Thread(target=store.commit, args=([VIEWS_PATH], "views"))
    writer.start()
    writer.join(0.2)
    assert writer.is_alive()
    release.set()
    reader.join(5)
    writer.join(5)
    assert seen[0][0] == 1
    assert views("v1") not in seen[0][1]
    assert store.revision == 2


def test_readers_wait_for_a_writer():
    lock = ReadWriteLock()
    order = []

    def read():
        with lock.reading():
            order.append("read")

    with lock.writing():
        reader = threading.Thread(target=read)
        reader.start()
        reader.join(0.2)
        with lock.writing(), lock.reading():
            order.append("write")
    reader.join(5)
    assert order == ["write", "read"]

def test_collect_notations_single_theory(store, fol_doc):
    store.commit([FOL_PATH])
    notations = store.collect_notations(FOL + "?equal")
    assert notations == set(fol_doc.modules[0].notations)
