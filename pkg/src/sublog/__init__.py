"""Learned indexes for rank queries on sorted samples, with operation counting."""
from .core import SortedKeyArray, binary_search_rank, normalize, rank_oracle
from .distributions import (CdfModel, build_subexp, parse_dist, pdf_bound, query_subexp,
                            sample_sorted)
from .instrument import OpContext, counted_cdf, counted_read
from .pca import PcaIndex, PcfModel, build_pca, build_pcf, query_pca
from .rda import RdaIndex, rda_build, rda_query, rda_size_ints
from .rds import conditional_cdf, rds_expected_ops, rds_search

__all__ = [
    "SortedKeyArray", "binary_search_rank", "normalize", "rank_oracle",
    "CdfModel", "build_subexp", "parse_dist", "pdf_bound", "query_subexp", "sample_sorted",
    "OpContext", "counted_cdf", "counted_read",
    "PcaIndex", "PcfModel", "build_pca", "build_pcf", "query_pca",
    "RdaIndex", "rda_build", "rda_query", "rda_size_ints",
    "conditional_cdf", "rds_expected_ops", "rds_search",
]
