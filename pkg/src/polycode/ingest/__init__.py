"""Turn multilingual source functions into task-ready samples."""
from .languages import ADAPTERS, GrammarAdapter, LanguageId, LanguageMap, get_adapter, register_adapter
from .samples import (MAX_PATH_LEN, MAX_SEQ_LEN, CodeSample, CompletionTarget, ParsedFunction, PathTable,
                      SummaryTarget, choose_mask_position, make_completion_sample, make_summarization_sample,
                      mask_eligible, parse_function)
from .storage import Dataset, SampleSet, build_dataset, load_dataset, read_records, serialize_dataset
from .subtokens import is_punctuation, split_identifier
from .syntax import (DOWN, UP, SyntaxTree, absolute_path, leaf_tokens, pairwise_relative_paths, parse_source,
                     relative_path, resample_path, reverse_path)
from .vocab import SPECIALS, Vocabulary, build_vocabularies

__all__ = [
    "ADAPTERS", "GrammarAdapter", "LanguageId", "LanguageMap", "get_adapter", "register_adapter",
    "MAX_PATH_LEN", "MAX_SEQ_LEN", "CodeSample", "CompletionTarget", "ParsedFunction", "PathTable",
    "SummaryTarget", "choose_mask_position", "make_completion_sample", "make_summarization_sample",
    "mask_eligible", "parse_function", "Dataset", "SampleSet", "build_dataset", "load_dataset",
    "read_records", "serialize_dataset", "is_punctuation", "split_identifier", "DOWN", "UP",
    "SyntaxTree", "absolute_path", "leaf_tokens", "pairwise_relative_paths", "parse_source",
    "relative_path", "resample_path", "reverse_path", "SPECIALS", "Vocabulary", "build_vocabularies",
]
