"""Link prediction with message-passing encoders and shortest-path sequences."""

from .encoders import EncoderConfig, GCNEncoder, NodeEmbeddings, SAGEEncoder, build_encoder, encode
from .evaluation import EvalReport, ranks_against_shared, report_from_ranks
from .graph import Graph, common_neighbors, load_graph, serialize_edges
from .heuristics import HeuristicScore, score
from .models import LinkPredictor, LinkScorerConfig, PhiConfig, build_model, encode_path_phi
from .paths import Path, PathIndex, build_index, shortest_path
from .splits import LinkSplit, make_split, message_passing_graph, sample_negatives, with_shared_negatives
from .symmetry import Coloring, LinkOrbitTable, enumerate_automorphisms, link_orbits, node_orbits, wl_refine
from .training import ModelBundle, TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "EncoderConfig",
    "EvalReport",
    "GCNEncoder",
    "Graph",
    "HeuristicScore",
    "LinkOrbitTable",
    "LinkPredictor",
    "LinkScorerConfig",
    "LinkSplit",
    "ModelBundle",
    "NodeEmbeddings",
    "Path",
    "PathIndex",
    "PhiConfig",
    "SAGEEncoder",
    "TrainConfig",
    "Coloring",
    "build_encoder",
    "build_index",
    "build_model",
    "common_neighbors",
    "encode",
    "encode_path_phi",
    "enumerate_automorphisms",
    "evaluate",
    "link_orbits",
    "load_graph",
    "make_split",
    "message_passing_graph",
    "node_orbits",
    "ranks_against_shared",
    "report_from_ranks",
    "sample_negatives",
    "score",
    "serialize_edges",
    "shortest_path",
    "train",
    "wl_refine",
    "with_shared_negatives",
]
