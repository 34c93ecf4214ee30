"""Block synthesis: template search, Clifford+T words and RZ snapping."""

from .clifford_t import CliffordTWord, min_t_count, rz_to_clifford_t, word_matrix
from .engine import ParamCircuit
from .instantiate import AnsatzTemplate, SynthesisResult, instantiate, make_result
from .ntro import ft_error_budget, ntro_pass
from .search import clear_cache, search_templates, synthesize_block

__all__ = [
    "AnsatzTemplate",
    "CliffordTWord",
    "ParamCircuit",
    "SynthesisResult",
    "clear_cache",
    "ft_error_budget",
    "instantiate",
    "make_result",
    "min_t_count",
    "ntro_pass",
    "rz_to_clifford_t",
    "search_templates",
    "synthesize_block",
    "word_matrix",
]
