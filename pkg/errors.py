#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Error Types
===========

Every failure the engine reports carries a stable ``code`` (the name used in
reports, CLI output and HTTP bodies) and, where known, the offending URI or
source position.
"""


class MmtError(Exception):
    """Base class for all engine errors"""

    code = "MmtError"

    def __init__(self, message, uri=None, source=None):
        super().__init__(message)
        self.message = message
        self.uri = uri
        self.source = source

    def __str__(self):
        where = self.uri if self.uri is not None else self.source
        if where is not None:
            return f"{self.code} {where}: {self.message}"
        return f"{self.code}: {self.message}"


# uri
class MalformedUri(MmtError):
    code = "MalformedUri"


class MissingContext(MmtError):
    code = "MissingContext"


# reader
class GrammarError(MmtError):
    code = "GrammarError"


# model
class OrphanAtom(MmtError):
    code = "OrphanAtom"


class DuplicateUri(MmtError):
    code = "DuplicateUri"


# checker / flatten
class UnresolvedReference(MmtError):
    code = "UnresolvedReference"


class ImportCycle(MmtError):
    code = "ImportCycle"


class MorphismDomainMismatch(MmtError):
    code = "MorphismDomainMismatch"


class TypeMismatch(MmtError):
    code = "TypeMismatch"


class MissingPlugin(MmtError):
    code = "MissingPlugin"


class UnmappedSymbol(MmtError):
    code = "UnmappedSymbol"


# abox / cones
class InconsistentFacts(MmtError):
    code = "InconsistentFacts"


class UnknownRelation(MmtError):
    code = "UnknownRelation"


class UnknownModule(MmtError):
    code = "UnknownModule"


# present
class NoApplicableNotation(MmtError):
    code = "NoApplicableNotation"


# store
class ValidationRejected(MmtError):
    code = "ValidationRejected"

    def __init__(self, report):
        super().__init__(f"{len(report.errors)} validation error(s)")
        self.report = report


class NotFound(MmtError):
    code = "NotFound"


class RevisionUnknown(MmtError):
    code = "RevisionUnknown"


class NameClash(MmtError):
    code = "NameClash"
