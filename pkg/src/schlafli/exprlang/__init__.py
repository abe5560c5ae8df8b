"""Expression language for user charts, warps and deformation generators."""

from .evaluate import JetValue, eval_jet, evaluate
from .jet import DomainError, Jet
from .parser import ExprError, ExprProgram, ExprSyntaxError, UnknownIdentifier, parse

__all__ = [
    "DomainError", "ExprError", "ExprProgram", "ExprSyntaxError", "Jet",
    "JetValue", "UnknownIdentifier", "eval_jet", "evaluate", "parse",
]
