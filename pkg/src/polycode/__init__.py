"""Path-biased transformers with language-conditioned weight generation for multilingual code."""

from .config import RunConfig, load_config
from .estimators import CodeCompleter, MethodNameSummarizer
from .exceptions import PolycodeError
from .ingest import Dataset, build_dataset, load_dataset, read_records

__version__ = "0.1.0"

__all__ = ["CodeCompleter", "MethodNameSummarizer", "RunConfig", "load_config", "PolycodeError", "Dataset",
           "build_dataset", "load_dataset", "read_records"]
