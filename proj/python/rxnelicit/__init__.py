"""Python bindings for the rxnelicit C++ core."""

import json

from . import _core
from ._core import (
    BackendError,
    ConfigError,
    DataError,
    RxnError,
    adaptability,
    bleu,
    builtin_templates,
    canonicalize,
    compose,
    exact_match,
    fuse,
    hash_embed,
    improvement,
    kmeans,
    meteor,
    nearest_template,
    parse_prompt,
    regex_tokens,
    render_rt_prompt,
    similarity,
    train_rt_classifier,
    validate,
    validity,
)

COMMANDS = ("elicit", "curate", "prompts", "generate", "evaluate", "run-all")


def run(command, **config):
    """Run one pipeline command; keyword arguments are config keys.

    Returns the command's summary as a dict. Environment variables
    RXN_EMBED_URL and RXN_GEN_URL apply as with the CLI.
    """
    return json.loads(_core._run_command(command, json.dumps(config)))

