"""Generalized Farey maps of Hecke triangle groups with exact Z[lambda_q] arithmetic."""
from .algring import RingContext, RingElem, ring_context_new
from .errors import CapExceeded, ContextMismatch, HeckeFareyError, PrecisionExhausted, TilingError
from .heckegroup import GroupElem, ProjPoint, alphabet, word_compose, words_iter

__all__ = [
    "RingContext", "RingElem", "ring_context_new",
    "CapExceeded", "ContextMismatch", "HeckeFareyError", "PrecisionExhausted", "TilingError",
    "GroupElem", "ProjPoint", "alphabet", "word_compose", "words_iter",
]
