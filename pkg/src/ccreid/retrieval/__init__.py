from ccreid.retrieval.extract import ExtractConfig, extract
from ccreid.retrieval.fusion import fuse
from ccreid.retrieval.ranking import RankingResult, rank
from ccreid.retrieval.store import DescriptorStore

__all__ = [
    "fuse",
    "extract",
    "ExtractConfig",
    "DescriptorStore",
    "rank",
    "RankingResult",
]
