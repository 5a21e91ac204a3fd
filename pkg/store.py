#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Versioned Document Store
========================

A directory-backed store of OMDoc-lite documents:

    docs/<host/path>              committed documents, mirrored by URI
    abox/<host/path>.abox         their ABoxes
    index/<Relation>.tsv          subject TAB object, sorted, one file per relation
    index/individuals.tsv         uri TAB type TAB document
    catalog.json                  [{"prefix": ..., "location": ...}]
    history/<n>.json              revision manifests
    history/blobs/<sha256>        content-addressed document snapshots
    HEAD                          current revision number
    config.json                   store configuration

Commits validate only the committed documents; everything they reference is
resolved through the index.  A rejected commit writes nothing.
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from urllib.parse import urlsplit

import requests

from abox import BINARY_RELATIONS, MODULE_TYPES, Binary, Unary, extract_abox, format_facts, parse_facts, query
from checker import Issue, ValidationReport, foundations_from_config, validate_structural, validate_typed
from config import CONFIG_FILE, StoreConfig, load_store_config
from cones import backward_cone, forward_cone
from errors import (
    GrammarError, MalformedUri, NameClash, NotFound, RevisionUnknown, UnknownModule, ValidationRejected,
)
from flatten import deref
from model import Style, Theory, TheoryGraph, atomize, rename_references
from reader import parse_document, serialize_document
from uri import LocalName, MmtUri, as_uri, parse_uri

logger = logging.getLogger(__name__)

REMOTE_TIMEOUT = 10


@dataclass
class Revision:
    number: int
    timestamp: str
    changed: list = field(default_factory=list)
    author: str = ""
    message: str = ""


def mirror_path(doc):
    """Relative path mirroring a document URI (host + path)"""
    parts = urlsplit(doc)
    segments = [s for s in (parts.netloc + "/" + parts.path).split("/") if s]
    if not segments or any(s in (".", "..") for s in segments):
        raise MalformedUri(f"cannot mirror document URI {doc!r}")
    if parts.scheme and parts.scheme not in ("http", "https"):
        segments.insert(0, parts.scheme)
    return "/".join(segments)


def _write_atomic(path, data):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
    with os.fdopen(fd, "wb") as f:
        f.write(data if isinstance(data, bytes) else data.encode("utf-8"))
    os.replace(tmp, path)


def _read_text(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


class ReadWriteLock:
    """Shared readers, one reentrant writer.

    A writer waits until no reader is inside; readers wait while a writer is.
    The writing thread itself may read.
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = None
        self._depth = 0

    @contextmanager
    def reading(self):
        me = threading.get_ident()
        with self._cond:
            while self._writer is not None and self._writer != me:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                self._cond.notify_all()

    @contextmanager
    def writing(self):
        me = threading.get_ident()
        with self._cond:
            if self._writer == me:
                self._depth += 1
            else:
                while self._writer is not None or self._readers:
                    self._cond.wait()
                self._writer, self._depth = me, 1
        try:
            yield
        finally:
            with self._cond:
                self._depth -= 1
                if not self._depth:
                    self._writer = None
                    self._cond.notify_all()


# ---------------------------------------------------------------------------
# Disk index
# ---------------------------------------------------------------------------

class StoreIndex:
    """Lazily loaded view of ``index/``; same interface as abox.FactIndex.

    Relation files are read on first use only, so ``relations_loaded`` shows
    which parts of the index a computation touched.
    """

    def __init__(self, index_dir, exclude=frozenset()):
        self.index_dir = index_dir
        self.exclude = exclude
        self.forward = {}
        self.backward = {}
        self._types = None
        self._documents = None
        self.lookups = {}
        self.relations_loaded = set()

    def _load(self, rel):
        if rel in self.forward:
            return
        fwd, bwd = {}, {}
        path = os.path.join(self.index_dir, f"{rel}.tsv")
        if os.path.exists(path):
            for line in _read_text(path).splitlines():
                s_text, o_text = line.split("\t")
                s, o = parse_uri(s_text), parse_uri(o_text)
                if Binary(rel, s, o) in self.exclude:
                    continue
                fwd.setdefault(s, set()).add(o)
                bwd.setdefault(o, set()).add(s)
        self.forward[rel], self.backward[rel] = fwd, bwd
        self.relations_loaded.add(rel)

    def _load_individuals(self):
        if self._types is not None:
            return
        self._types, self._documents = {}, {}
        path = os.path.join(self.index_dir, "individuals.tsv")
        if os.path.exists(path):
            for line in _read_text(path).splitlines():
                u_text, type_, doc = line.split("\t")
                u = parse_uri(u_text)
                if Unary(type_, u) in self.exclude:
                    continue
                self._types[u] = type_
                self._documents[u] = doc

    def objects(self, rel, subject):
        self._load(rel)
        self.lookups[rel] = self.lookups.get(rel, 0) + 1
        return set(self.forward[rel].get(subject, ()))

    def subjects(self, rel, obj):
        self._load(rel)
        self.lookups[rel] = self.lookups.get(rel, 0) + 1
        return set(self.backward[rel].get(obj, ()))

    def subjects_below(self, rel, module):
        """Subjects whose object lies inside ``module`` or a module under it"""
        self._load(rel)
        self.lookups[rel] = self.lookups.get(rel, 0) + 1
        return {s for o, subjects in self.backward[rel].items()
                if o.doc == module.doc and o.mod is not None and o.mod.startswith(module.mod)
                for s in subjects}

    def type_of(self, individual):
        self._load_individuals()
        return self._types.get(individual)

    def document_of(self, individual):
        self._load_individuals()
        return self._documents.get(individual)

    def individuals(self, *types):
        self._load_individuals()
        return {u for u, t in self._types.items() if not types or t in types}

    def modules(self):
        return self.individuals(*MODULE_TYPES)


def _index_lines(facts_by_doc):
    """Sorted index file contents from {document: facts}"""
    relations = {rel: set() for rel in BINARY_RELATIONS}
    individuals = set()
    for doc, facts in facts_by_doc.items():
        for fact in facts:
            if isinstance(fact, Binary):
                relations[fact.rel].add(f"{fact.subject}\t{fact.object}")
            else:
                individuals.add(f"{fact.individual}\t{fact.type}\t{doc}")
    files = {f"{rel}.tsv": sorted(lines) for rel, lines in relations.items()}
    files["individuals.tsv"] = sorted(individuals)
    return {name: "".join(line + "\n" for line in lines) for name, lines in files.items()}


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------

class DocumentStore:
    def __init__(self, root):
        self.root = os.path.abspath(root)
        if not os.path.exists(os.path.join(self.root, "HEAD")):
            raise NotFound(f"no store at {self.root}")
        self.config = load_store_config(self.root)
        self.lock = ReadWriteLock()
        self.parse_count = 0
        self.documents_opened = 0

    @classmethod
    def init(cls, root, config=None):
        """Create an empty store (revision 0)"""
        root = os.path.abspath(root)
        for sub in ("docs", "abox", "index", os.path.join("history", "blobs")):
            os.makedirs(os.path.join(root, sub), exist_ok=True)
        if not os.path.exists(os.path.join(root, "HEAD")):
            config = config or StoreConfig()
            _write_atomic(os.path.join(root, CONFIG_FILE), config.to_json())
            _write_atomic(os.path.join(root, "catalog.json"), "[]\n")
            manifest = {"number": 0, "timestamp": datetime.now().isoformat(), "author": "",
                        "message": "init", "changed": [], "documents": {}}
            _write_atomic(os.path.join(root, "history", "0.json"), json.dumps(manifest, indent=2) + "\n")
            _write_atomic(os.path.join(root, "HEAD"), "0\n")
            logger.info("Initialized empty store at %s", root)
        return cls(root)

    def reading(self):
        """Context in which no commit can land; every read of the service runs inside one"""
        return self.lock.reading()

    # paths ------------------------------------------------------------------

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def doc_path(self, doc):
        return self.path("docs", *mirror_path(doc).split("/"))

    def abox_path(self, doc):
        return self.path("abox", *mirror_path(doc).split("/")) + ".abox"

    # revisions --------------------------------------------------------------

    @property
    def revision(self):
        return int(_read_text(self.path("HEAD")).strip())

    def manifest(self, number=None):
        head = self.revision
        number = head if number is None else number
        if not isinstance(number, int) or number < 0 or number > head:
            raise RevisionUnknown(f"revision {number} does not exist (head is {head})")
        return json.loads(_read_text(self.path("history", f"{number}.json")))

    def history(self):
        return [self._revision(self.manifest(n)) for n in range(self.revision + 1)]

    @staticmethod
    def _revision(manifest):
        return Revision(manifest["number"], manifest["timestamp"], list(manifest["changed"]),
                        manifest.get("author", ""), manifest.get("message", ""))

    def documents(self, at=None):
        """Document URIs present at a revision"""
        return sorted(self.manifest(at)["documents"])

    def _blob(self, sha):
        with open(self.path("history", "blobs", sha), "rb") as f:
            return f.read()

    # catalog ------------------------------------------------------------------

    def catalog(self):
        return json.loads(_read_text(self.path("catalog.json")))

    def add_catalog_entry(self, prefix, location):
        with self.lock.writing():
            entries = [e for e in self.catalog() if e["prefix"] != prefix]
            entries.append({"prefix": prefix, "location": location})
            entries.sort(key=lambda e: e["prefix"])
            _write_atomic(self.path("catalog.json"), json.dumps(entries, indent=2) + "\n")

    def locate(self, doc):
        """Longest catalog prefix match → (location, rest) or None"""
        best = None
        for entry in self.catalog():
            if doc.startswith(entry["prefix"]) and (best is None or len(entry["prefix"]) > len(best["prefix"])):
                best = entry
        if best is None:
            return None
        return best["location"], doc[len(best["prefix"]):]

    def _fetch_remote(self, url):
        logger.info("Fetching %s", url)
        try:
            response = requests.get(url, timeout=REMOTE_TIMEOUT)
        except requests.RequestException as e:
            logger.warning("Remote fetch of %s failed: %s", url, e)
            raise NotFound(f"remote fetch failed: {e}", uri=url)
        if response.status_code != 200:
            raise NotFound(f"remote answered {response.status_code}", uri=url)
        return response.content

    # reading ------------------------------------------------------------------

    def index(self, exclude=frozenset()):
        return StoreIndex(self.path("index"), exclude)

    def document_bytes(self, doc, at=None):
        manifest = self.manifest(at)
        entry = manifest["documents"].get(doc)
        if entry is not None:
            return self._blob(entry["blob"])
        if at is None:
            located = self.locate(doc)
            if located is not None:
                location, rest = located
                if location.startswith(("http://", "https://")):
                    return self._fetch_remote(location + rest)
                path = self.path(location + rest)
                if os.path.isfile(path):
                    with open(path, "rb") as f:
                        return f.read()
        raise NotFound("document not in store", uri=doc)

    def _parse(self, data, base=None, path=None):
        self.parse_count += 1
        return parse_document(data, base, path=path)

    def open_document(self, doc, at=None):
        data = self.document_bytes(doc, at)
        self.documents_opened += 1
        return self._parse(data, parse_uri(doc))

    def abox(self, doc):
        path = self.abox_path(doc) if doc in self.manifest()["documents"] else None
        if path is None or not os.path.exists(path):
            raise NotFound("no ABox for document", uri=doc)
        return _read_text(path)

    def graph(self, at=None):
        """Every document of a revision, loaded"""
        return TheoryGraph([self.open_document(d, at) for d in self.documents(at)])

    def graph_for(self, modules, at=None):
        """The documents of the backward cones of ``modules``, loaded"""
        if at is not None and at != self.revision:
            return self.graph(at)
        index = self.index()
        docs = set()
        for m in modules:
            if m is None or index.type_of(m) is None:
                continue
            for member in backward_cone(index, m):
                docs.add(index.document_of(member))
        return TheoryGraph([self.open_document(d) for d in sorted(docs)])

    def retrieve(self, uri, at=None):
        """Document bytes for document URIs, a deref result otherwise"""
        uri = as_uri(uri)
        if at is not None:
            self.manifest(at)
        if uri.is_document:
            return self.document_bytes(uri.doc, at)
        graph = self.graph_for([uri.module_uri], at)
        item = deref(graph, uri)
        if item is None:
            raise NotFound("no such item", uri=str(uri))
        return item

    def query(self, start, expr):
        return query(self.index(), as_uri(start), expr)

    def cone(self, module, forward=False, transitive=True):
        index = self.index()
        cone = forward_cone if forward else backward_cone
        return cone(index, as_uri(module), transitive)

    def collect_notations(self, item):
        """Notations declared in the backward cone of the item's module, one pass over its documents"""
        item = as_uri(item)
        module = item.module_uri
        index = self.index()
        if module is None or module not in index.modules():
            raise UnknownModule("not a committed module", uri=str(item))
        members = backward_cone(index, module)
        by_doc = {}
        for m in members:
            by_doc.setdefault(index.document_of(m), set()).add(m)
        notations = set()
        for doc in sorted(by_doc):
            for module_ in self.open_document(doc).modules:
                if module_.uri in by_doc[doc] and isinstance(module_, (Theory, Style)):
                    notations.update(module_.notations)
        return notations

    def status(self):
        return {
            "revision": self.revision,
            "documents": len(self.manifest()["documents"]),
            "parse_count": self.parse_count,
            "documents_opened": self.documents_opened,
            "typed_validation": self.config.typed_validation,
        }

    def state_hash(self):
        """Hash over every file of the store"""
        digest = hashlib.sha256()
        for dirpath, dirnames, filenames in os.walk(self.root):
            dirnames.sort()
            for name in sorted(filenames):
                full = os.path.join(dirpath, name)
                digest.update(os.path.relpath(full, self.root).encode("utf-8") + b"\0")
                with open(full, "rb") as f:
                    digest.update(f.read())
                digest.update(b"\0")
        return digest.hexdigest()

    # writing ------------------------------------------------------------------

    def _load_sources(self, sources):
        """(name, bytes) pairs from paths or pairs"""
        loaded = []
        for source in sources:
            if isinstance(source, tuple):
                loaded.append(source)
            else:
                with open(source, "rb") as f:
                    loaded.append((str(source), f.read()))
        return loaded

    def _old_facts(self, doc):
        if doc not in self.manifest()["documents"]:
            return frozenset()
        return parse_facts(_read_text(self.abox_path(doc)))

    def _typed_report(self, documents, context):
        referenced = set()
        for doc in documents:
            for fact in extract_abox(doc):
                if isinstance(fact, Binary) and fact.rel == "DependsOn":
                    referenced.add(fact.object)
        own = {str(d.base) for d in documents}
        docs = set()
        for m in referenced:
            if context.type_of(m) is None:
                continue
            for member in backward_cone(context, m):
                doc = context.document_of(member)
                if doc not in own:
                    docs.add(doc)
        graph = TheoryGraph([self.open_document(d) for d in sorted(docs)] + list(documents))
        modules = [m for d in documents for m in d.modules]
        return validate_typed(graph, foundations_from_config(self.config), modules)

    def commit(self, sources, message="", author=None):
        """Validate and persist documents (paths or (name, bytes) pairs) as one revision"""
        with self.lock.writing():
            loaded = self._load_sources(sources)
            documents, errors = [], []
            for name, data in loaded:
                try:
                    documents.append(self._parse(data, path=name))
                except (GrammarError, MalformedUri) as e:
                    where = e.source if e.source is not None else name
                    errors.append(Issue("grammar", e.code, str(where), e.message))
            if errors:
                raise ValidationRejected(ValidationReport("none", "structural", sorted(errors)))
            return self._commit(documents, [data for _, data in loaded], message, author)

    def _commit(self, documents, payloads, message, author):
        bases = [str(d.base) for d in documents]
        if len(set(bases)) != len(bases):
            issue = Issue("structural", "DuplicateUri", bases[0], "document committed twice in one revision")
            raise ValidationRejected(ValidationReport("grammar", "structural", [issue]))

        old = {b: self._old_facts(b) for b in bases}
        excluded = frozenset().union(*old.values()) if old else frozenset()
        context = self.index(exclude=excluded)
        atoms = [a for d in documents for a in atomize(d)]
        report = validate_structural(atoms, context)
        if report.ok and self.config.typed_validation:
            typed = self._typed_report(documents, context)
            if not typed.ok:
                report = typed
        if not report.ok:
            logger.info("Rejected commit of %s: %s", ", ".join(bases), ", ".join(report.codes()))
            raise ValidationRejected(report)

        head = self.manifest()
        number = head["number"] + 1
        entries = dict(head["documents"])

        # blobs, documents and ABoxes first; HEAD last
        new_facts = {}
        for doc, data in zip(documents, payloads):
            base = str(doc.base)
            sha = hashlib.sha256(data).hexdigest()
            blob = self.path("history", "blobs", sha)
            if not os.path.exists(blob):
                _write_atomic(blob, data)
            _write_atomic(self.doc_path(base), data)
            facts = extract_abox(doc)
            _write_atomic(self.abox_path(base), format_facts(facts))
            entries[base] = {"path": mirror_path(base), "blob": sha}
            new_facts[base] = facts

        self._update_index(new_facts, old)
        catalog = {e["prefix"] for e in self.catalog()}
        for base in bases:
            if base not in catalog:
                self.add_catalog_entry(base, "docs/" + mirror_path(base))

        return self._write_revision(number, bases, entries, message, author)

    def _write_revision(self, number, changed, entries, message, author):
        manifest = {
            "number": number,
            "timestamp": datetime.now().isoformat(),
            "author": author if author is not None else self.config.author,
            "message": message,
            "changed": sorted(changed),
            "documents": entries,
        }
        _write_atomic(self.path("history", f"{number}.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        _write_atomic(self.path("HEAD"), f"{number}\n")
        logger.info("Revision %d: %s", number, ", ".join(manifest["changed"]) or "(no changes)")
        return self._revision(manifest)

    def _update_index(self, new_facts, old_facts):
        """Swap the old facts of the committed documents for their new ones, line by line"""
        removed = _index_lines(old_facts)
        added = _index_lines(new_facts)
        changed_docs = set(new_facts)
        for name in added:
            path = self.path("index", name)
            lines = set(_read_text(path).splitlines()) if os.path.exists(path) else set()
            if name == "individuals.tsv":
                lines = {line for line in lines if line.rsplit("\t", 1)[-1] not in changed_docs}
            else:
                lines -= set(removed[name].splitlines())
            lines |= set(added[name].splitlines())
            _write_atomic(path, "".join(line + "\n" for line in sorted(lines)))

    def rename_module(self, old, new_name, author=None):
        """Rename a module and patch the documents of its one-step forward cone"""
        with self.lock.writing():
            old = as_uri(old)
            index = self.index()
            if old.mod is None or old not in index.modules():
                raise UnknownModule("not a committed module", uri=str(old))
            new_mod = new_name if isinstance(new_name, LocalName) else LocalName.parse(new_name)
            new = MmtUri(old.doc, new_mod)
            if new == old:
                head = self.manifest()
                return self._write_revision(head["number"] + 1, [], head["documents"],
                                            f"rename {old} (unchanged)", author)
            if index.type_of(new) is not None:
                raise NameClash(f"{new_mod} already used in {old.doc}", uri=str(new))

            cone = forward_cone(index, old, transitive=False)
            # notations name their symbol without a DependsOn edge
            cone |= {n.module_uri for n in index.subjects_below("HasNotationFor", old)}
            docs = sorted({index.document_of(m) for m in cone} | {old.doc})
            patched = [rename_references(self.open_document(d), old, new) for d in docs]
            payloads = [serialize_document(d) for d in patched]
            revision = self._commit(patched, payloads, f"rename {old} to {new}", author)
            logger.info("Renamed %s to %s across %d document(s)", old, new, len(docs))
            return revision
