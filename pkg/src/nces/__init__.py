"""Neural synthesis of ALC class expressions from positive/negative examples."""

from .expressions import ConceptExpr, parse_expression, render_expression
from .kb import KnowledgeBase, Vocabulary, build_vocabulary, load_kb, tokenize_expression
from .reasoner import retrieve_instances

__version__ = "0.1.0"

__all__ = [
    "ConceptExpr",
    "KnowledgeBase",
    "Vocabulary",
    "build_vocabulary",
    "load_kb",
    "parse_expression",
    "render_expression",
    "retrieve_instances",
    "tokenize_expression",
]
