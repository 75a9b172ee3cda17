"""Monte Carlo laboratory for the largest cluster of supercritical Poisson continuum percolation."""

__version__ = "0.1.0"

from .clusters import ClusterLabeling, TopClusters, build_grid, cluster_of, find_clusters, top_clusters
from .localscore import (CouplingReport, Event, ScorePair, Window, classify_e3, local_score,
                         localized_total, make_window)
from .pointproc import Box, PointSet, RngStream, derive_stream, sample_poisson
from .stats import (RateFit, SummarySet, kolmogorov_distance, normal_cdf, rate_fit,
                    second_largest_scaling, summarize)
