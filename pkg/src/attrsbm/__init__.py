"""Community detection on networks with real-valued vertex attributes.

Belief propagation on a stochastic block model whose vertices carry
label-conditional Gaussian attributes, with EM parameter estimation.
"""

from .attributes import ModelParams, kmeanspp_1d, log_vertex_potential, protocol_params, sample_attributes
from .baselines import detect_kmeans_only, detect_naive_mf
from .bp import BpState, compute_edge_belief, compute_external_field, compute_vertex_belief, init_state, mpm_labels, sweep, update_message
from .em import DetectConfig, DetectionResult, detect, em_update_gamma, em_update_gamma_prime, em_update_theta
from .metrics import EvalReport, accuracy, evaluate, modularity
from .network import (
    AttributedNetwork,
    ParseError,
    ValidationError,
    load_gml,
    parse_edge_list,
    parse_gml,
    sample_four_group,
    sample_sbm,
)

__version__ = "0.1.0"
