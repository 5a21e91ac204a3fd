#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Configuration
=============

Defaults for the CLI, the HTTP service and the document store, plus the
per-store ``config.json`` overrides.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field

logger = logging.getLogger(__name__)

# Service defaults
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 5001

# Store defaults
DEFAULT_STORE_DIR = "mmt_store"
STORE_ENV_VAR = "MMT_STORE"
CONFIG_FILE = "config.json"

# Definiens expansion cap of the syntactic foundation
DEFAULT_EXPANSION_DEPTH = 64

# Meta-theory served by the syntactic foundation unless a store says otherwise
DEFAULT_FOUNDATION_META = "http://cds.omdoc.org/logics/fol.omdoc?FOL"

DEFAULT_STYLE_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "styles", "default.omdoc")
DEFAULT_STYLE_URI = "http://cds.omdoc.org/styles/default.omdoc?generic"


@dataclass
class StoreConfig:
    typed_validation: bool = False
    foundations: list = field(default_factory=lambda: [DEFAULT_FOUNDATION_META])
    author: str = ""
    expansion_depth: int = DEFAULT_EXPANSION_DEPTH

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def store_dir(explicit=None):
    """Store directory: explicit argument, then $MMT_STORE, then the default"""
    return explicit or os.environ.get(STORE_ENV_VAR) or DEFAULT_STORE_DIR


def load_store_config(root):
    """Read ``config.json`` from a store root; missing keys keep their defaults"""
    path = os.path.join(root, CONFIG_FILE)
    config = StoreConfig()
    if not os.path.exists(path):
        return config

    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)

    for key, value in data.items():
        if hasattr(config, key):
            setattr(config, key, value)
        else:
            logger.warning("Ignoring unknown store config key %r in %s", key, path)
    return config
