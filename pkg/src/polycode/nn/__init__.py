"""Neural components: path encoder, attention variants, language-conditioned generators, task heads."""
from .attention import (PATH_SLOTS, SCHEME_SLOTS, SLOTS, TOKEN_SLOTS, AttentionInput, AttentionWeightSet,
                        PositionTables, attend_abs_pos, attend_meta, attend_rel_pos, attend_tptrans,
                        attend_vanilla, masked_softmax, merge_weight_sets)
from .heads import (CompletionHead, DecoderState, SummaryDecoder, completion_logits, completion_loss,
                    greedy_decode, pointer_mix, sequence_loss)
from .meta import (FactorizedGenerator, GeneratorBank, LanguageConditioner, generate_weight,
                   generator_parameter_count, project_language, scheme_slots, weight_set_for)
from .model import Batch, CodeEncoder, CodeModel, EncoderLayer
from .path_encoder import PathEncoder, pad_paths
