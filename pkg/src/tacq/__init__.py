"""Total acquisition on graphs: exact and greedy solvers, cut-off trees,
randomised embedding pipelines and Monte Carlo sweeps."""

from .graph import Graph, make_rng, derive_rng, sample_gnp, sample_random_tree
from .game import exact_at, greedy_at, verify_protocol
from .bounds import capacity_vector, certified_lower_bound

__version__ = "0.1.0"
