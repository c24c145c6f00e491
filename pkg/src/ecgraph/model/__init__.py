from .features import (Sentence, dist_bin, edge_base_features, edge_label_features, feature_id,
                       spine_features)
from .linear import (ConfigError, Hyper, ModelParams, ModelScores, TrainingError, candidate_labels,
                     choose_spines, derivable, fallback_spine, load_model, predict, save_model,
                     structure_features, train)
