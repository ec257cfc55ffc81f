"""Topic-SCORE: spectral estimation of the topic matrix in pLSI topic models.

The estimator normalizes the word-frequency matrix, takes its leading left
singular vectors, forms entry-wise ratios against the first one, hunts the
vertices of the resulting simplex-shaped point cloud and reads the topic
matrix off barycentric coordinates.
"""

from .corpus import DocTermMatrix, PreprocessReport, frequencies, load_bag_of_words, preprocess
from .errors import ConfigError, CorpusFormatError, NumericalError, TopicScoreError
from .estimator import TopicEstimate, estimate_weights, fit, fit_frequencies, reconstruct_topics
from .spectral import RatioMatrix, SpectralDecomposition, normalization_diag, ratio_matrix, truncated_svd
from .synth import (
    LossReport,
    SynthConfig,
    TopicModel,
    generate_model,
    l1_loss,
    run_monte_carlo,
    sample_corpus,
)
from .vertex_hunt import KMeansResult, VertexHuntResult, distance_to_simplex, hunt_vertices, kmeans

__version__ = "0.1.0"
