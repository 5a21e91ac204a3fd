#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
MMT-URIs
========

Every knowledge item is addressed by a three-part URI ``doc?mod?sym``:

    doc  an absolute URI without query or fragment (empty for relative refs)
    mod  a ``/``-separated module path   (e.g. ``Ring`` or ``Outer/Inner``)
    sym  a ``/``-separated symbol path   (e.g. ``add/grp/mon/mag/*``)

Parsing is purely local: no document is ever consulted.
"""

import re
from dataclasses import dataclass
from urllib.parse import quote, unquote, urljoin, urlsplit

from errors import MalformedUri, MissingContext

# RFC 3986 pchar, with %-encoding
_PCHAR_RE = re.compile(r"(?:[A-Za-z0-9\-._~!$&'()*+,;=:@]|%[0-9A-Fa-f]{2})+")
_PCHAR_SAFE = "!$&'()*+,;=:@-._~"


def _decode_segment(raw):
    if not _PCHAR_RE.fullmatch(raw):
        raise MalformedUri(f"invalid name segment {raw!r}")
    try:
        return unquote(raw, errors="strict")
    except UnicodeDecodeError:
        raise MalformedUri(f"invalid %-encoding in {raw!r}")


def _encode_segment(segment):
    return quote(segment, safe=_PCHAR_SAFE)


@dataclass(frozen=True, order=True)
class LocalName:
    """Non-empty path of decoded name segments"""

    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise MalformedUri("empty local name")
        for segment in self.segments:
            if not isinstance(segment, str) or segment == "":
                raise MalformedUri(f"empty segment in {self.segments!r}")

    @classmethod
    def parse(cls, text):
        if text == "":
            raise MalformedUri("empty local name")
        return cls(tuple(_decode_segment(raw) for raw in text.split("/")))

    @classmethod
    def of(cls, *segments):
        return cls(tuple(segments))

    def __str__(self):
        return "/".join(_encode_segment(s) for s in self.segments)

    def __truediv__(self, other):
        if isinstance(other, LocalName):
            return LocalName(self.segments + other.segments)
        return LocalName(self.segments + (other,))

    def __len__(self):
        return len(self.segments)

    @property
    def head(self):
        return self.segments[0]

    @property
    def last(self):
        return self.segments[-1]

    @property
    def tail(self):
        """Everything after the first segment, or None"""
        return LocalName(self.segments[1:]) if len(self.segments) > 1 else None

    @property
    def init(self):
        """Everything before the last segment, or None"""
        return LocalName(self.segments[:-1]) if len(self.segments) > 1 else None

    def startswith(self, prefix):
        return self.segments[:len(prefix.segments)] == prefix.segments


@dataclass(frozen=True)
class MmtUri:
    doc: str
    mod: LocalName = None
    sym: LocalName = None

    @property
    def is_absolute(self):
        return self.doc != "" and (self.sym is None or self.mod is not None)

    @property
    def doc_uri(self):
        return MmtUri(self.doc)

    @property
    def module_uri(self):
        """The module part of this URI (None for document URIs)"""
        if self.mod is None:
            return None
        return MmtUri(self.doc, self.mod)

    @property
    def is_document(self):
        return self.mod is None and self.sym is None

    @property
    def is_module(self):
        return self.mod is not None and self.sym is None

    @property
    def is_symbol(self):
        return self.sym is not None

    @property
    def name(self):
        """Last segment of the most specific component"""
        if self.sym is not None:
            return self.sym.last
        if self.mod is not None:
            return self.mod.last
        return self.doc

    def __truediv__(self, segment):
        """Extend the symbol path (or start one below a module)"""
        if self.mod is None:
            raise MalformedUri(f"cannot add symbol {segment!r} to document URI {self}")
        if self.sym is None:
            sym = segment if isinstance(segment, LocalName) else LocalName.of(segment)
        else:
            sym = self.sym / segment
        return MmtUri(self.doc, self.mod, sym)

    def with_sym(self, sym):
        return MmtUri(self.doc, self.mod, sym)

    def is_prefix_of(self, other):
        """Component-wise prefix test used by notation applicability.

        A document-only URI is a prefix of every URI whose document starts with
        it; otherwise documents must agree and module/symbol paths must extend.
        """
        if self.mod is None:
            return other.doc.startswith(self.doc)
        if self.doc != other.doc or other.mod is None:
            return False
        if self.sym is None:
            return other.mod.startswith(self.mod)
        return self.mod == other.mod and other.sym is not None and other.sym.startswith(self.sym)

    def __str__(self):
        return format_uri(self)

    def __lt__(self, other):
        return str(self) < str(other)


def _check_doc(doc):
    if "#" in doc:
        raise MalformedUri(f"document part may not carry a fragment: {doc!r}")
    if any(c.isspace() for c in doc):
        raise MalformedUri(f"whitespace in document part {doc!r}")
    if doc:
        try:
            urlsplit(doc)
        except ValueError as e:
            raise MalformedUri(f"bad document URI {doc!r}: {e}")


def parse_uri(text):
    """Split ``doc?mod?sym`` on the first two ``?``"""
    if not text:
        raise MalformedUri("empty URI")
    parts = text.split("?")
    if len(parts) > 3:
        raise MalformedUri(f"more than two '?' separators in {text!r}")

    doc = parts[0]
    _check_doc(doc)
    mod = LocalName.parse(parts[1]) if len(parts) > 1 and parts[1] != "" else None
    if len(parts) == 2 and parts[1] == "":
        raise MalformedUri(f"empty module part in {text!r}")
    sym = None
    if len(parts) == 3:
        sym = LocalName.parse(parts[2])
    if doc and sym is not None and mod is None:
        raise MalformedUri(f"symbol without module in {text!r}")
    return MmtUri(doc, mod, sym)


def format_uri(u):
    text = u.doc
    if u.mod is not None:
        text += "?" + str(u.mod)
    if u.sym is not None:
        if u.mod is None:
            text += "?"
        text += "?" + str(u.sym)
    return text


def _split_mod_sym(rest, text):
    """``mod[?sym]`` → (LocalName, LocalName|None)"""
    if "?" in rest:
        mod_text, sym_text = rest.split("?", 1)
        if "?" in sym_text:
            raise MalformedUri(f"more than two '?' separators in {text!r}")
        return LocalName.parse(mod_text), LocalName.parse(sym_text)
    return LocalName.parse(rest), None


def resolve_relative(base, ref):
    """Resolve ``ref`` against an absolute ``base``.

        ?mod'?sym'   → doc?mod'?sym'
        ??sym'       → doc?mod?sym'
        ?/mod'?sym'  → doc?mod/mod'?sym'
        anything else: its document part is resolved per RFC 3986
    """
    if not base.doc:
        raise MissingContext(f"cannot resolve {ref!r} against relative base {base}")

    if ref.startswith("??"):
        if base.mod is None:
            raise MissingContext(f"{ref!r} needs a module in the base {base}")
        return MmtUri(base.doc, base.mod, LocalName.parse(ref[2:]))

    if ref.startswith("?/"):
        if base.mod is None:
            raise MissingContext(f"{ref!r} needs a module in the base {base}")
        mod, sym = _split_mod_sym(ref[2:], ref)
        return MmtUri(base.doc, base.mod / mod, sym)

    if ref.startswith("?"):
        mod, sym = _split_mod_sym(ref[1:], ref)
        return MmtUri(base.doc, mod, sym)

    doc_ref, sep, rest = ref.partition("?")
    _check_doc(doc_ref)
    doc = urljoin(base.doc, doc_ref) if doc_ref else base.doc
    if not sep:
        return MmtUri(doc)
    mod, sym = _split_mod_sym(rest, ref)
    return MmtUri(doc, mod, sym)


def relativize(u, base):
    """Shortest same-document reference for ``u`` seen from ``base``"""
    if base is None or u.doc != base.doc or u.mod is None:
        return format_uri(u)
    if u.sym is not None and base.mod is not None and u.mod == base.mod:
        return "??" + str(u.sym)
    text = "?" + str(u.mod)
    if u.sym is not None:
        text += "?" + str(u.sym)
    return text


def as_uri(value):
    """Accept an MmtUri or its textual form"""
    if isinstance(value, MmtUri):
        return value
    return parse_uri(value)
