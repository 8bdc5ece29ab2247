"""Overlapping and nonoverlapping community detection with link communities."""

from .bench import SyntheticSpec, fraction_correct, generate_two_community, jaccard_overlap, nmi_cover_variant, \
    nmi_partition
from .em import EmConfig, log_likelihood, restart_sweep, run_em
from .fast import PruneConfig, fast_sweep, run_fast_em
from .graph import Graph, from_edges, largest_component, load_edge_list, read_edge_list
from .membership import Cover, edge_colors, extract_cover
from .nonoverlap import Partition, dcsbm_log_likelihood, run_nonoverlap, vertex_move_refine

__version__ = "0.1.0"

__all__ = [
    "Cover", "EmConfig", "Graph", "Partition", "PruneConfig", "SyntheticSpec",
    "dcsbm_log_likelihood", "edge_colors", "extract_cover", "fast_sweep", "fraction_correct", "from_edges",
    "generate_two_community", "jaccard_overlap", "largest_component", "load_edge_list", "log_likelihood",
    "nmi_cover_variant", "nmi_partition", "read_edge_list", "restart_sweep", "run_em", "run_fast_em",
    "run_nonoverlap", "vertex_move_refine",
]
