import io

import pytest

from conftest import ALGEBRA, ALGEBRA_PATH, FOL, FOL_PATH, INSTANCES, INSTANCES_PATH, INVALID_DOCUMENTS, VIEWS, VIEWS_PATH
from main import main
from store import DocumentStore
from web_server import create_app


def _upload(*pairs):
    return {"files": [(io.BytesIO(data), name) for name, data in pairs]}


def _file(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture
def store(tmp_path):
    store = DocumentStore.init(str(tmp_path / "store"))
    store.commit([FOL_PATH, ALGEBRA_PATH, VIEWS_PATH], "fixtures")
    return store


@pytest.fixture
def client(store):
    app = create_app(store)
    app.config["TESTING"] = True
    return app.test_client()


def test_home(client):
    response = client.get("/")
    assert response.status_code == 200
    assert b"/deref" in response.data


def test_deref(client):
    response = client.get("/deref", query_string={"uri": f"{ALGEBRA}?Ring?add/grp/mon/mag/*"})
    assert response.status_code == 200
    assert response.content_type.startswith("text/xml")
    assert response.data.startswith(b"<?xml")


def test_deref_missing(client):
    response = client.get("/deref", query_string={"uri": f"{ALGEBRA}?Ring?nothing"})
    assert response.status_code == 404
    assert response.data.startswith(b"NotFound")


def test_malformed_requests(client):
    assert client.get("/deref", query_string={"uri": "a?b?c?d"}).status_code == 400
    assert client.get("/deref").status_code == 400
    assert client.get("/query", query_string={"start": f"{ALGEBRA}?Ring", "rel": "Bogus"}).status_code == 400


def test_unknown_revision(client):
    response = client.get("/deref", query_string={"uri": f"{ALGEBRA}?Magma?*", "revision": "9"})
    assert response.status_code == 404


def test_non_numeric_revision(client):
    response = client.get("/deref", query_string={"uri": f"{ALGEBRA}?Magma?*", "revision": "abc"})
    assert response.status_code == 400
    assert response.data.startswith(b"MalformedUri")


def test_unexpected_failure_is_a_plain_500(client, monkeypatch):
    def fail(*args, **kwargs):
        raise RuntimeError("index unreadable")

    monkeypatch.setattr("web_server.query_answer", fail)
    response = client.get("/query", query_string={"start": f"{ALGEBRA}?Ring", "rel": "Imports"})
    assert response.status_code == 500
    assert response.content_type.startswith("text/plain")
    assert response.data == b"InternalError: index unreadable\n"


def test_instantiated_symbol_over_http(store, client):
    store.commit([INSTANCES_PATH], "instances")
    response = client.get("/deref", query_string={"uri": f"{INSTANCES}?NatPlus?mag/*"})
    assert response.status_code == 200
    flat = client.get("/flatten", query_string={"theory": f"{INSTANCES}?NatPlus", "format": "lines"})
    assert flat.status_code == 200
    assert flat.data == (f"{INSTANCES}?NatPlus?plus\n{INSTANCES}?NatPlus?mag/*\n"
                         f"{INSTANCES}?NatPlus?add\n").encode("utf-8")


def test_unknown_module(client):
    response = client.get("/cone", query_string={"module": "http://example.org/x.omdoc?Nothing"})
    assert response.status_code == 404


def test_status(client):
    response = client.get("/status", query_string={"format": "xml"})
    assert response.status_code == 200
    assert b'revision="1"' in response.data


def test_commit(client, store):
    body = (f'<omdoc base="http://example.org/b.omdoc"><theory name="B" meta="{FOL}">'
            f'<import name="r" from="{ALGEBRA}?Ring"/></theory></omdoc>').encode("utf-8")
    data = _upload(("b.omdoc", body))
    data["message"] = "dependent"
    data["author"] = "web"
    response = client.post("/commit", data=data, content_type="multipart/form-data")
    assert response.status_code == 200
    assert response.data == b"revision 2\nhttp://example.org/b.omdoc\n"
    assert store.history()[2].author == "web"


def test_rejected_commit(client, store):
    before = store.state_hash()
    name, code, data = INVALID_DOCUMENTS[8]
    response = client.post("/commit", data=_upload((f"{name}.omdoc", data)), content_type="multipart/form-data")
    assert response.status_code == 409
    assert code.encode("utf-8") in response.data
    assert store.state_hash() == before


def test_commit_without_files(client):
    response = client.post("/commit", data={"message": "nothing"}, content_type="multipart/form-data")
    assert response.status_code == 400


def test_validate(client, store):
    ok = client.post("/validate", data=_upload(("views.omdoc", _file(VIEWS_PATH))),
                     content_type="multipart/form-data")
    # the views are already committed
    assert ok.status_code == 409
    assert b"DuplicateUri" in ok.data
    name, code, data = INVALID_DOCUMENTS[2]
    bad = client.post("/validate", data=_upload((f"{name}.omdoc", data)), content_type="multipart/form-data")
    assert bad.status_code == 409
    assert code.encode("utf-8") in bad.data


def test_validate_accepts_new_documents(client):
    body = f'<omdoc base="http://example.org/c.omdoc"><theory name="C" meta="{FOL}"/></omdoc>'.encode("utf-8")
    response = client.post("/validate", query_string={"level": "typed"}, data=_upload(("c.omdoc", body)),
                           content_type="multipart/form-data")
    assert response.status_code == 200
    assert response.data.splitlines()[-1].startswith(b"typed Result typed errors=0")


# ---------------------------------------------------------------------------
# The command line and the service answer with the same bytes
# ---------------------------------------------------------------------------

PARITY = [
    (["deref", f"{ALGEBRA}?Ring?add/grp/mon/mag/*"], "/deref", {"uri": f"{ALGEBRA}?Ring?add/grp/mon/mag/*"}),
    (["deref", f"{ALGEBRA}?Monoid"], "/deref", {"uri": f"{ALGEBRA}?Monoid"}),
    (["deref", ALGEBRA], "/deref", {"uri": ALGEBRA}),
    (["deref", f"{VIEWS}?v2"], "/deref", {"uri": f"{VIEWS}?v2"}),
    (["deref", "--self-contained", f"{ALGEBRA}?Ring"], "/deref",
     {"uri": f"{ALGEBRA}?Ring", "self-contained": "true"}),
    (["deref", "--revision", "1", f"{ALGEBRA}?Magma?*"], "/deref", {"uri": f"{ALGEBRA}?Magma?*", "revision": "1"}),
    (["--format", "xml", "flatten", f"{ALGEBRA}?Ring"], "/flatten", {"theory": f"{ALGEBRA}?Ring"}),
    (["--format", "lines", "flatten", "--include-meta", f"{ALGEBRA}?Group"], "/flatten",
     {"theory": f"{ALGEBRA}?Group", "include-meta": "true", "format": "lines"}),
    (["abox", VIEWS], "/abox", {"doc": VIEWS}),
    (["--format", "xml", "query", f"{ALGEBRA}?Ring", "(Imports)+"], "/query",
     {"start": f"{ALGEBRA}?Ring", "rel": "(Imports)+", "format": "xml"}),
    (["query", f"{ALGEBRA}?Monoid", "Imports^-1 | HasMetaTheory"], "/query",
     {"start": f"{ALGEBRA}?Monoid", "rel": "Imports^-1 | HasMetaTheory"}),
    (["--format", "xml", "cone", f"{ALGEBRA}?Ring"], "/cone", {"module": f"{ALGEBRA}?Ring", "format": "xml"}),
    (["--format", "xml", "cone", "--forward", "--one-step", f"{ALGEBRA}?Magma"], "/cone",
     {"module": f"{ALGEBRA}?Magma", "direction": "forward", "one-step": "true", "format": "xml"}),
    (["cone", "--emit-omdoc", f"{VIEWS}?v2"], "/cone", {"module": f"{VIEWS}?v2", "emit-omdoc": "true"}),
    (["present", f"{ALGEBRA}?CGroup?comm"], "/present", {"uri": f"{ALGEBRA}?CGroup?comm"}),
    (["present", "--format", "html", f"{ALGEBRA}?Magma?*"], "/present",
     {"uri": f"{ALGEBRA}?Magma?*", "format": "html"}),
]


@pytest.mark.parametrize("argv,route,params", PARITY, ids=[" ".join(p[0]) for p in PARITY])
def test_cli_and_http_agree(store, client, argv, route, params):
    out = io.BytesIO()
    code = main(["--store", store.root] + argv, out=out, err=io.StringIO())
    assert code == 0
    response = client.get(route, query_string=params)
    assert response.status_code == 200
    assert response.data == out.getvalue()
