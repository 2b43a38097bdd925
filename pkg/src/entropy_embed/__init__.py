"""Graph embedding by minimising the predictive entropy of the adjacency matrix."""

from .engine import EmbedResult, IterationConfig, embed
from .graph import Graph, load_edge_list, read_snapshot, write_snapshot
from .metrics import PEReport, pe_exact, pe_sampled, separation_report, ssq_aligned

__all__ = [
    "EmbedResult",
    "Graph",
    "IterationConfig",
    "PEReport",
    "embed",
    "load_edge_list",
    "pe_exact",
    "pe_sampled",
    "read_snapshot",
    "separation_report",
    "ssq_aligned",
    "write_snapshot",
]

__version__ = "0.1.0"
