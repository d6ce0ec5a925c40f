"""Reference-free summary scoring from token-likelihood dumps.

The package splits into a scoring engine (:mod:`harim.engine`), text
baselines (:mod:`harim.baselines`), correlation statistics
(:mod:`harim.stats`), a meta-evaluation layer (:mod:`harim.meta`) and the
record formats tying them together (:mod:`harim.records`).  The ``harim``
command line binds them into reproducible batch runs.
"""

__version__ = "0.1.0"

from .engine import HarimConfig, harim, harim_plus, harim_token_term, loglik, score_batch
from .records import AnnotatedPair, LikelihoodRecord, ScoreTable
from .stats import kendall_tau, pearson_rho, spearman_r

__all__ = [
    "__version__",
    "AnnotatedPair",
    "HarimConfig",
    "LikelihoodRecord",
    "ScoreTable",
    "harim",
    "harim_plus",
    "harim_token_term",
    "kendall_tau",
    "loglik",
    "pearson_rho",
    "score_batch",
    "spearman_r",
]
