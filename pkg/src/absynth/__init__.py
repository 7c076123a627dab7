"""Synthesis of sound, precise abstract transformers for integer ops.

Given a concrete integer operation and a finite bitvector abstract
domain (known-bits or unsigned/signed constant ranges), this package
searches for small straight-line programs whose meet soundly and
precisely approximates the operation's best abstract transformer,
and ships the evaluation harness that measures how close it got.
"""

from .bitvec import BitVec, ConstKind, DslOpcode
from .domains import AbstractValue, Domain, beta, contains, join, leq, meet, size, top
from .dsl import GuardedTransformer, Program, parse_transformers
from .oracle import TestSuite, TierPolicy, best_transformer, gen_suite
from .outer import OuterConfig, SynthesisReport, TransformerSet, synthesize, verify
from .product import ProductValue, reduce
from .search import SearchConfig

__version__ = "0.1.0"

__all__ = [
    "AbstractValue",
    "BitVec",
    "ConstKind",
    "Domain",
    "DslOpcode",
    "GuardedTransformer",
    "OuterConfig",
    "Program",
    "ProductValue",
    "SearchConfig",
    "SynthesisReport",
    "TestSuite",
    "TierPolicy",
    "TransformerSet",
    "best_transformer",
    "beta",
    "contains",
    "gen_suite",
    "join",
    "leq",
    "meet",
    "parse_transformers",
    "reduce",
    "size",
    "synthesize",
    "top",
    "verify",
]
